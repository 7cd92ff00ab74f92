#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipegrade/encoding.hpp"
#include "pipegrade/record.hpp"

namespace pipegrade {

class GenError : public Error {
 public:
  using Error::Error;
};

enum class FactorMode {
  Uniform,   ///< rank uniform over 1..5
  Weights,   ///< rank drawn with the given weights
  Constant,  ///< every record gets the same rank (and the same raw value)
  Label,     ///< rank equals the record's planted rating
};

struct FactorGen {
  FactorMode mode = FactorMode::Uniform;
  std::array<double, kNumRatings> weights{1, 1, 1, 1, 1};
  int rank = 1;
  /// Raw value used by Constant; numbers for numeric factors, text otherwise.
  std::optional<std::string> value;
};

enum class PlantedRule {
  None,        ///< factors ignore the rating apart from Label mode
  HcWeighted,  ///< rating = clamp(round(w . (structural, om, repair)), 1, 5)
};

struct GenSpec {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::array<double, kNumRatings> class_distribution{0.2, 0.2, 0.2, 0.2, 0.2};
  PlantedRule rule = PlantedRule::HcWeighted;
  std::array<double, 3> rule_weights{0.4, 0.4, 0.2};
  /// Fraction of records whose rating is replaced by a different one, chosen uniformly.
  double label_noise = 0.0;
  /// Keyed by factor name; factors not listed are Uniform.
  std::map<std::string, FactorGen> factors;
  std::size_t missing_count = 0;
  std::size_t inconsistent_count = 0;

  /// Throws GenError when the spec cannot be satisfied.
  void validate(const FactorSchema& schema) const;

  static GenSpec from_json(const nlohmann::json& doc);
  static GenSpec load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Named specs shipped with the tool: "field_mix", "separable", "noisy_separable",
/// "defects_3100".
std::vector<std::string> preset_names();
GenSpec preset(std::string_view name);

/// Planted rating of an (structural, om, repair) triple under the rule weights.
Rating hc_rule(const std::array<double, 3>& weights, int structural, int om, int repair);

struct GenResult {
  std::vector<PipeRecord> records;
  /// Ratings before label noise, aligned with records.
  std::vector<Rating> planted;
  std::vector<std::string> missing_ids;
  std::vector<std::string> inconsistent_ids;
  std::vector<std::string> noisy_ids;
};

/// Deterministic for a given spec. Class counts follow the distribution by
/// largest remainder; defects and noise hit exact counts of records.
GenResult generate(const GenSpec& spec, const FactorSchema& schema = FactorSchema::builtin());

}  // namespace pipegrade
