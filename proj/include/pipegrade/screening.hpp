#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipegrade/encoding.hpp"

namespace pipegrade {

inline constexpr double kDefaultAlpha = 0.05;
inline constexpr std::size_t kMinSwSample = 3;
inline constexpr std::size_t kMaxSwSample = 5000;

class StatsError : public Error {
 public:
  using Error::Error;
};

/// Shapiro-Wilk weights for a sample of size n (3 <= n <= 5000) using Royston's
/// approximation (AS R94). The vector is antisymmetric, a[i] = -a[n-1-i], ordered
/// to pair with the ascending order statistics, and has unit Euclidean norm.
std::vector<double> sw_coefficients(std::size_t n);

struct SwStatistic {
  std::size_t n = 0;
  /// NaN when the sample is degenerate.
  double w = 0;
  double p_value = 0;
  /// Zero spread: W's denominator vanishes. p_value is reported as 0.
  bool degenerate = false;
};

/// W and its p-value via Royston's normalizing transformation. Input order is
/// irrelevant; ties are used as-is. Throws StatsError when n is outside [3, 5000]
/// or a value is not finite.
SwStatistic shapiro_wilk(std::span<const double> sample);

/// Upper-tail p-value for a given W at sample size n (no degenerate handling).
double sw_p_value(double w, std::size_t n);

enum class Verdict { Keep, Drop };

struct SwResult {
  std::string factor;
  SwStatistic stat;
  Verdict verdict = Verdict::Drop;
};

struct ScreeningReport {
  double alpha = kDefaultAlpha;
  std::vector<SwResult> results;
  /// Kept factors, in dataset column order.
  std::vector<std::string> retained;
};

/// One test per factor column; a factor is kept iff its p-value exceeds alpha and
/// the column is not constant.
ScreeningReport screen(const EncodedDataset& data, double alpha = kDefaultAlpha);

std::string_view to_string(Verdict verdict);

nlohmann::json to_json(const ScreeningReport& report);
ScreeningReport screening_from_json(const nlohmann::json& doc);
/// factor,n,W,p_value,degenerate,verdict
std::string write_screening_csv(const ScreeningReport& report);
std::string render_text(const ScreeningReport& report);

}  // namespace pipegrade
