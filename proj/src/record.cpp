#include "pipegrade/record.hpp"

#include <charconv>
#include <cmath>

namespace pipegrade {

namespace {

struct FieldInfo {
  Field field;
  std::string_view name;
  FieldType type;
};

constexpr std::array<FieldInfo, 16> kFieldInfo = {{
    {Field::PipeId, "pipe_id", FieldType::Text},
    {Field::PipeAge, "pipe_age_years", FieldType::Number},
    {Field::Material, "material", FieldType::Text},
    {Field::Diameter, "diameter_inches", FieldType::Number},
    {Field::Shape, "shape", FieldType::Text},
    {Field::Depth, "depth", FieldType::Text},
    {Field::SoilType, "soil_type", FieldType::Text},
    {Field::Loading, "loading", FieldType::Text},
    {Field::WasteType, "waste_type", FieldType::Text},
    {Field::SeismicZone, "seismic_zone", FieldType::Text},
    {Field::StructuralScore, "structural_score", FieldType::Score},
    {Field::OmScore, "om_score", FieldType::Score},
    {Field::RepairHistory, "repair_history", FieldType::Text},
    {Field::TotalLength, "total_length_feet", FieldType::Number},
    {Field::LengthSurveyed, "length_surveyed_feet", FieldType::Number},
    {Field::ComprehensiveRating, "comprehensive_rating", FieldType::Score},
}};

const FieldInfo& info(Field field) { return kFieldInfo[static_cast<std::size_t>(field)]; }

template <class Record>
auto text_slot(Record& r, Field field) -> decltype(&r.material) {
  switch (field) {
    case Field::Material: return &r.material;
    case Field::Shape: return &r.shape;
    case Field::Depth: return &r.depth;
    case Field::SoilType: return &r.soil_type;
    case Field::Loading: return &r.loading;
    case Field::WasteType: return &r.waste_type;
    case Field::SeismicZone: return &r.seismic_zone;
    case Field::RepairHistory: return &r.repair_history;
    default: return nullptr;
  }
}

template <class Record>
auto number_slot(Record& r, Field field) -> decltype(&r.pipe_age_years) {
  switch (field) {
    case Field::PipeAge: return &r.pipe_age_years;
    case Field::Diameter: return &r.diameter_inches;
    case Field::TotalLength: return &r.total_length_feet;
    case Field::LengthSurveyed: return &r.length_surveyed_feet;
    default: return nullptr;
  }
}

template <class Record>
auto score_slot(Record& r, Field field) -> decltype(&r.om_score) {
  switch (field) {
    case Field::StructuralScore: return &r.structural_score;
    case Field::OmScore: return &r.om_score;
    default: return nullptr;
  }
}

}  // namespace

std::string_view field_name(Field field) { return info(field).name; }

FieldType field_type(Field field) { return info(field).type; }

std::optional<Field> find_field(std::string_view name) {
  for (const auto& fi : kFieldInfo) {
    if (fi.name == name) return fi.field;
  }
  return std::nullopt;
}

Field parse_field(std::string_view name) {
  if (auto f = find_field(name)) return *f;
  throw Error("unknown field name '" + std::string(name) + "'");
}

bool has_value(const PipeRecord& record, Field field) {
  if (field == Field::PipeId) return !record.pipe_id.empty();
  if (field == Field::ComprehensiveRating) return is_rating(record.comprehensive_rating);
  if (auto* t = text_slot(record, field)) return t->has_value();
  if (auto* n = number_slot(record, field)) return n->has_value();
  if (auto* s = score_slot(record, field)) return s->has_value();
  return false;
}

std::optional<double> numeric_value(const PipeRecord& record, Field field) {
  if (field == Field::ComprehensiveRating) return static_cast<double>(record.comprehensive_rating);
  if (auto* n = number_slot(record, field)) return *n;
  if (auto* s = score_slot(record, field)) {
    if (*s) return static_cast<double>(**s);
  }
  return std::nullopt;
}

std::optional<std::string> text_value(const PipeRecord& record, Field field) {
  if (field == Field::PipeId) return record.pipe_id;
  if (field == Field::ComprehensiveRating) return std::to_string(record.comprehensive_rating);
  if (auto* t = text_slot(record, field)) return *t;
  if (auto* n = number_slot(record, field)) {
    if (*n) return format_number(**n);
    return std::nullopt;
  }
  if (auto* s = score_slot(record, field)) {
    if (*s) return std::to_string(**s);
  }
  return std::nullopt;
}

void clear_field(PipeRecord& record, Field field) {
  if (field == Field::PipeId || field == Field::ComprehensiveRating) {
    throw Error("field '" + std::string(field_name(field)) + "' cannot be cleared");
  }
  if (auto* t = text_slot(record, field)) {
    t->reset();
  } else if (auto* n = number_slot(record, field)) {
    n->reset();
  } else if (auto* s = score_slot(record, field)) {
    s->reset();
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

}  // namespace pipegrade
