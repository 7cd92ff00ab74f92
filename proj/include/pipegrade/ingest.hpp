#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipegrade/record.hpp"

namespace pipegrade {

/// Maps each canonical field to the CSV header that carries it.
struct ColumnMap {
  std::map<Field, std::string> headers;

  /// Identity mapping: every canonical field name is its own header.
  static ColumnMap defaults();
  /// Parses `canonical=Header` lines; '#' starts a comment. Unlisted fields keep
  /// their canonical header.
  static ColumnMap parse(std::string_view text);
  static ColumnMap load(const std::filesystem::path& path);

  const std::string& header(Field field) const;
};

/// Fields whose column must appear in the header row.
bool column_required(Field field);

struct ParseDiagnostic {
  std::size_t line = 0;  ///< 1-based line in the source file
  std::string pipe_id;
  std::string cause;
};

struct LoadResult {
  std::vector<PipeRecord> records;
  std::vector<ParseDiagnostic> diagnostics;
};

/// Raised for file-level problems: unreadable file, missing header or columns.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// With require_label false the rating column may be absent or blank (rating 0),
/// as for records that are to be scored.
LoadResult parse_records(std::istream& in, const ColumnMap& columns = ColumnMap::defaults(),
                         bool require_label = true);
LoadResult load_records(const std::filesystem::path& path,
                        const ColumnMap& columns = ColumnMap::defaults(), bool require_label = true);

/// Serializes records with the header row given by `columns`. Round-trips through
/// parse_records.
std::string write_records_csv(std::span<const PipeRecord> records,
                              const ColumnMap& columns = ColumnMap::defaults());

/// Known depth categories, shallowest first.
const std::vector<std::string>& depth_categories();
/// Numeric depth in feet -> category; text matching a category (or its banded
/// spelling such as "> 10 and <= 15 Feet") -> canonical category; anything else is
/// returned trimmed but otherwise unchanged so cleaning can flag it.
std::string normalize_depth(std::string_view raw);
std::string depth_category_for_feet(double feet);

// ---------------------------------------------------------------------------
// Cleaning

enum class Comparison { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

struct RangeRule {
  Field field;
  std::optional<double> min;
  bool min_inclusive = true;
  std::optional<double> max;
  bool max_inclusive = true;
};

/// `lhs op rhs` between two numeric fields; skipped when either side is absent.
struct CrossFieldRule {
  Field lhs;
  Comparison op;
  Field rhs;
};

struct ValidationConfig {
  std::vector<Field> required;
  /// A record is dropped as missing when more than this many required fields are absent.
  std::size_t max_missing = 0;
  std::vector<RangeRule> ranges;
  /// When non-empty, a present depth must be one of these categories.
  std::vector<std::string> depth_categories;
  std::vector<CrossFieldRule> cross_field;

  static ValidationConfig defaults();
  static ValidationConfig from_json(const nlohmann::json& doc);
  static ValidationConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

enum class DropReason { Missing, Inconsistent };

struct DropRecord {
  std::string pipe_id;
  DropReason reason;
  std::string detail;
};

struct CleaningReport {
  std::size_t total_in = 0;
  std::size_t dropped_missing = 0;
  std::size_t dropped_inconsistent = 0;
  std::size_t retained = 0;
  std::vector<DropRecord> drops;
};

struct CleanResult {
  std::vector<PipeRecord> retained;
  CleaningReport report;
};

/// Never throws on record content: every record is either retained (in input
/// order) or listed in the report with its reason.
CleanResult clean(std::span<const PipeRecord> records,
                  const ValidationConfig& rules = ValidationConfig::defaults());

/// Reason a single record would be dropped, if any.
std::optional<DropRecord> check_record(const PipeRecord& record, const ValidationConfig& rules);

nlohmann::json to_json(const CleaningReport& report);
std::string render_text(const CleaningReport& report);
std::string_view to_string(DropReason reason);

}  // namespace pipegrade
