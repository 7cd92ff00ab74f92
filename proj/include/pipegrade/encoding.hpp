#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pipegrade/record.hpp"

namespace pipegrade {

enum class CriteriaGroup { Physical, External, Hydraulic };
enum class FactorKind { NumericBanded, Categorical, PassThrough };
/// What to do with a value that matches no band or category.
enum class UnknownPolicy { Strict, MapToWorst };

/// Interval of raw values sharing one rank. An absent upper bound is +infinity.
struct Band {
  double lower = 0;
  bool lower_inclusive = true;
  std::optional<double> upper;
  bool upper_inclusive = false;
  int rank = 1;
  std::string text;

  bool contains(double value) const;
};

struct Category {
  std::string value;
  int rank = 1;
};

struct FactorDef {
  std::string name;     ///< stable identifier, e.g. "soil_type"
  std::string display;  ///< table label, e.g. "Soil Type"
  CriteriaGroup group = CriteriaGroup::Physical;
  Field field = Field::PipeAge;
  FactorKind kind = FactorKind::Categorical;
  double domain_min = 0;
  bool domain_min_inclusive = true;
  std::vector<Band> bands;            ///< NumericBanded only, ascending by lower edge
  std::vector<Category> categories;   ///< Categorical only
  UnknownPolicy unknown = UnknownPolicy::Strict;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Attribute-to-rank mapping for the twelve model factors. Immutable once built;
/// construction validates grouping, band contiguity and rank ranges.
class FactorSchema {
 public:
  static FactorSchema from_json(const nlohmann::json& doc);
  static FactorSchema load(const std::filesystem::path& path);
  /// The schema file shipped with the library (data/schema/default_schema.json).
  static const FactorSchema& builtin();

  nlohmann::json to_json() const;

  const std::string& name() const { return name_; }
  const std::vector<FactorDef>& factors() const { return factors_; }
  std::vector<std::string> factor_names() const;
  std::optional<std::size_t> index_of(std::string_view factor) const;
  const FactorDef& factor(std::string_view name) const;

 private:
  void validate() const;

  std::string name_;
  std::vector<FactorDef> factors_;
  nlohmann::json source_;
};

/// Encoded ranks for one pipe, aligned with the factor list of the dataset it
/// belongs to.
struct FeatureVector {
  std::string pipe_id;
  std::vector<int> ranks;
  Rating label = 0;

  bool operator==(const FeatureVector&) const = default;
};

struct EncodingIssue {
  std::string pipe_id;
  std::string factor;
  std::string value;
  std::string message;
};

class EncodingError : public Error {
 public:
  explicit EncodingError(std::vector<EncodingIssue> issues);
  const std::vector<EncodingIssue>& issues() const { return issues_; }

 private:
  std::vector<EncodingIssue> issues_;
};

/// Rank vectors plus the factor names that give each column its meaning.
struct EncodedDataset {
  std::vector<std::string> factors;
  std::vector<FeatureVector> rows;
  /// Non-fatal notes, e.g. values mapped to the worst rank by policy.
  std::vector<EncodingIssue> notes;
};

/// Rank of a numeric value under a banded factor; nullopt when no band matches.
std::optional<int> rank_numeric(const FactorDef& factor, double value);
/// Rank of a text value under a categorical factor (case-insensitive, trimmed).
std::optional<int> rank_category(const FactorDef& factor, std::string_view value);

/// Encodes all schema factors of one record. Throws EncodingError when a value is
/// absent or unmatched under a strict policy; map-to-worst values get rank 5 and a
/// note appended to `notes` when given. With require_label false a rating of 0
/// (unlabelled) is accepted.
FeatureVector encode(const PipeRecord& record, const FactorSchema& schema,
                     std::vector<EncodingIssue>* notes = nullptr, bool require_label = true);

/// Encodes every record; strict failures are collected across the whole input and
/// reported together.
EncodedDataset encode_dataset(std::span<const PipeRecord> records, const FactorSchema& schema,
                              bool require_label = true);

/// Restricts every vector to the kept factors, in the dataset's column order.
/// Throws SchemaError on an empty keep set or an unknown name.
EncodedDataset project(const EncodedDataset& data, const std::set<std::string>& keep);
EncodedDataset project(const EncodedDataset& data, const std::vector<std::string>& keep);

std::string_view to_string(CriteriaGroup group);
std::string_view to_string(FactorKind kind);

/// CSV with columns pipe_id, <factor...>, label.
std::string write_vectors_csv(const EncodedDataset& data);
EncodedDataset read_vectors_csv(std::string_view text);

}  // namespace pipegrade
