#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pipegrade {

/// Condition ratings run 1 (excellent) to 5 (replace immediately).
using Rating = int;
inline constexpr int kNumRatings = 5;

inline constexpr bool is_rating(int value) { return value >= 1 && value <= kNumRatings; }

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical record fields. The CSV header for each is configurable through a ColumnMap.
enum class Field {
  PipeId,
  PipeAge,
  Material,
  Diameter,
  Shape,
  Depth,
  SoilType,
  Loading,
  WasteType,
  SeismicZone,
  StructuralScore,
  OmScore,
  RepairHistory,
  TotalLength,
  LengthSurveyed,
  ComprehensiveRating,
};

enum class FieldType { Text, Number, Score };

inline constexpr std::array<Field, 16> kAllFields = {
    Field::PipeId,       Field::PipeAge,         Field::Material,    Field::Diameter,
    Field::Shape,        Field::Depth,           Field::SoilType,    Field::Loading,
    Field::WasteType,    Field::SeismicZone,     Field::StructuralScore, Field::OmScore,
    Field::RepairHistory, Field::TotalLength,    Field::LengthSurveyed,  Field::ComprehensiveRating,
};

/// The twelve model factor fields, in framework order (4 physical, 5 external, 3 hydraulic).
inline constexpr std::array<Field, 12> kFactorFields = {
    Field::PipeAge,  Field::Material,    Field::Diameter,        Field::Shape,
    Field::Depth,    Field::SoilType,    Field::Loading,         Field::WasteType,
    Field::SeismicZone, Field::StructuralScore, Field::OmScore, Field::RepairHistory,
};

std::string_view field_name(Field field);
FieldType field_type(Field field);
/// Throws Error for names that are not canonical field names.
Field parse_field(std::string_view name);
std::optional<Field> find_field(std::string_view name);

/// One pipe segment as reported by an inspection. Absent values are std::nullopt;
/// ingest never invents a value.
struct PipeRecord {
  std::string pipe_id;
  std::optional<double> pipe_age_years;
  std::optional<std::string> material;
  std::optional<double> diameter_inches;
  std::optional<std::string> shape;
  /// Normalized depth category, e.g. "0-10 Feet".
  std::optional<std::string> depth;
  std::optional<std::string> soil_type;
  std::optional<std::string> loading;
  std::optional<std::string> waste_type;
  std::optional<std::string> seismic_zone;
  std::optional<int> structural_score;
  std::optional<int> om_score;
  std::optional<std::string> repair_history;
  std::optional<double> total_length_feet;
  std::optional<double> length_surveyed_feet;
  Rating comprehensive_rating = 0;

  bool operator==(const PipeRecord&) const = default;
};

bool has_value(const PipeRecord& record, Field field);
/// Numeric view of Number and Score fields (and the label); nullopt when absent or textual.
std::optional<double> numeric_value(const PipeRecord& record, Field field);
/// Text rendering of any present field, as it would be written to CSV.
std::optional<std::string> text_value(const PipeRecord& record, Field field);
/// Clears an optional field. Clearing PipeId or ComprehensiveRating is an error.
void clear_field(PipeRecord& record, Field field);

/// Shortest round-trip decimal rendering used for every number written to disk.
std::string format_number(double value);

}  // namespace pipegrade
