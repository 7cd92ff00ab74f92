#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pipegrade/record.hpp"

namespace pipegrade {

class MetricsError : public Error {
 public:
  using Error::Error;
};

/// 5x5 counts with rows = predicted rating and columns = actual rating.
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<std::int64_t, kNumRatings>, kNumRatings>;

  ConfusionMatrix() = default;
  /// Throws MetricsError on a negative count.
  explicit ConfusionMatrix(const Counts& counts);

  std::int64_t at(Rating predicted, Rating actual) const;
  void add(Rating predicted, Rating actual, std::int64_t count = 1);
  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(Rating predicted) const;
  std::int64_t column_sum(Rating actual) const;
  const Counts& counts() const { return counts_; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  Counts counts_{};
};

ConfusionMatrix confusion(std::span<const Rating> predictions, std::span<const Rating> actuals);

/// Grid with a header row of actual ratings 1..5 and a leading column of
/// predicted ratings 1..5. The corner cell is free text.
ConfusionMatrix read_confusion_csv(std::string_view text);
std::string write_confusion_csv(const ConfusionMatrix& m);

/// Trace over total. Throws on an empty matrix.
double overall_accuracy(const ConfusionMatrix& m);

struct OneVsRest {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
};

/// TP is the diagonal entry, FP the rest of its predicted row, FN the rest of
/// its actual column, TN everything else.
OneVsRest one_vs_rest(const ConfusionMatrix& m, Rating c);

struct ClassScores {
  Rating rating = 0;
  OneVsRest counts;
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  // A zero denominator reports the score as 0 and clears the flag.
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
};

ClassScores class_scores(const ConfusionMatrix& m, Rating c);

struct ModelScores {
  std::string name;
  ConfusionMatrix matrix;
  double overall_accuracy = 0;
  std::array<ClassScores, kNumRatings> classes;
};

struct NamedMatrix {
  std::string name;
  ConfusionMatrix matrix;
};

struct ComparisonReport {
  std::vector<ModelScores> models;
  /// Extra header lines shown above the tables.
  std::vector<std::string> notes;
};

ModelScores score(std::string name, const ConfusionMatrix& m);
ComparisonReport report(std::span<const NamedMatrix> matrices, std::vector<std::string> notes = {});

/// Percent with two decimals, e.g. "73.23%".
std::string format_percent(double fraction);

/// Aligned text: overall accuracy per model, then the per-rating grid of
/// accuracy, precision, recall and F1.
std::string render_text(const ComparisonReport& r);
nlohmann::json to_json(const ComparisonReport& r);
/// Long format, one row per model and rating plus an "overall" row per model.
std::string write_scores_csv(const ComparisonReport& r);

}  // namespace pipegrade
