#include "pipegrade/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "pipegrade/io.hpp"

namespace pipegrade {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Column mapping

ColumnMap ColumnMap::defaults() {
  ColumnMap map;
  for (Field f : kAllFields) map.headers[f] = std::string(field_name(f));
  return map;
}

ColumnMap ColumnMap::parse(std::string_view text) {
  ColumnMap map = defaults();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error("column map line " + std::to_string(line_no) + ": expected canonical=Header");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    auto field = find_field(key);
    if (!field) {
      throw Error("column map line " + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
    if (value.empty()) {
      throw Error("column map line " + std::to_string(line_no) + ": empty header for '" + key + "'");
    }
    map.headers[*field] = value;
  }
  return map;
}

ColumnMap ColumnMap::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const std::string& ColumnMap::header(Field field) const { return headers.at(field); }

bool column_required(Field field) {
  return field != Field::TotalLength && field != Field::LengthSurveyed;
}

// ---------------------------------------------------------------------------
// Depth categories

const std::vector<std::string>& depth_categories() {
  static const std::vector<std::string> kCategories = {"0-10 Feet", "10-15 Feet", "15-20 Feet",
                                                       "20-25 Feet", ">25 Feet"};
  return kCategories;
}

std::string depth_category_for_feet(double feet) {
  const auto& cats = depth_categories();
  if (feet <= 10) return cats[0];
  if (feet <= 15) return cats[1];
  if (feet <= 20) return cats[2];
  if (feet <= 25) return cats[3];
  return cats[4];
}

namespace {

std::optional<double> parse_double(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  double value = 0;
  auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

const std::unordered_map<std::string, std::string>& depth_aliases() {
  static const auto kAliases = [] {
    const auto& c = depth_categories();
    std::unordered_map<std::string, std::string> m;
    for (const auto& cat : c) m[normalize_key(cat)] = cat;
    const std::vector<std::pair<std::string, int>> spelled = {
        {"<= 10 feet", 0},          {"<=10 feet", 0},           {"0-10", 0},
        {"> 10 and <= 15 feet", 1}, {">10 and <=15 feet", 1},   {"10-15", 1},
        {"> 15 and <= 20 feet", 2}, {">15 and <=20 feet", 2},   {"15-20", 2},
        {"> 20 and <= 25 feet", 3}, {">20 and <=25 feet", 3},   {"20-25", 3},
        {"> 25 feet", 4},           {"25+ feet", 4},            {">25", 4},
    };
    for (const auto& [text, idx] : spelled) m[text] = c[static_cast<std::size_t>(idx)];
    return m;
  }();
  return kAliases;
}

}  // namespace

std::string normalize_depth(std::string_view raw) {
  std::string text = trim(raw);
  std::string key = normalize_key(text);
  if (auto it = depth_aliases().find(key); it != depth_aliases().end()) return it->second;

  std::string numeric = key;
  for (std::string_view unit : {"feet", "foot", "ft"}) {
    if (numeric.size() > unit.size() && numeric.ends_with(unit)) {
      numeric = trim(std::string_view(numeric).substr(0, numeric.size() - unit.size()));
      break;
    }
  }
  if (auto feet = parse_double(numeric); feet && *feet >= 0) return depth_category_for_feet(*feet);
  return text;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

bool is_missing_token(const std::string& trimmed) {
  if (trimmed.empty()) return true;
  std::string lower = to_lower(trimmed);
  return lower == "na" || lower == "n/a" || lower == "null";
}

struct RowError {
  std::string cause;
};

std::optional<int> parse_score(const std::string& text, Field field) {
  auto value = parse_double(text);
  if (!value) {
    throw RowError{"non-numeric value '" + text + "' in " + std::string(field_name(field))};
  }
  if (*value != std::floor(*value)) {
    throw RowError{"non-integer value '" + text + "' in " + std::string(field_name(field))};
  }
  if (*value < 1 || *value > kNumRatings) {
    if (field == Field::ComprehensiveRating) throw RowError{"label out of range 1–5"};
    throw RowError{std::string(field_name(field)) + " out of range 1–5"};
  }
  return static_cast<int>(*value);
}

void assign(PipeRecord& r, Field field, const std::string& raw, bool require_label) {
  std::string text = trim(raw);
  if (field == Field::PipeId) {
    r.pipe_id = text;
    return;
  }
  if (is_missing_token(text)) {
    if (field == Field::ComprehensiveRating && require_label) throw RowError{"missing label"};
    return;
  }
  switch (field_type(field)) {
    case FieldType::Text: {
      std::string value = field == Field::Depth ? normalize_depth(text) : text;
      switch (field) {
        case Field::Material: r.material = value; break;
        case Field::Shape: r.shape = value; break;
        case Field::Depth: r.depth = value; break;
        case Field::SoilType: r.soil_type = value; break;
        case Field::Loading: r.loading = value; break;
        case Field::WasteType: r.waste_type = value; break;
        case Field::SeismicZone: r.seismic_zone = value; break;
        case Field::RepairHistory: r.repair_history = value; break;
        default: break;
      }
      return;
    }
    case FieldType::Number: {
      auto value = parse_double(text);
      if (!value) {
        throw RowError{"non-numeric value '" + text + "' in " + std::string(field_name(field))};
      }
      switch (field) {
        case Field::PipeAge: r.pipe_age_years = value; break;
        case Field::Diameter: r.diameter_inches = value; break;
        case Field::TotalLength: r.total_length_feet = value; break;
        case Field::LengthSurveyed: r.length_surveyed_feet = value; break;
        default: break;
      }
      return;
    }
    case FieldType::Score: {
      auto value = parse_score(text, field);
      if (field == Field::StructuralScore) r.structural_score = value;
      if (field == Field::OmScore) r.om_score = value;
      if (field == Field::ComprehensiveRating) r.comprehensive_rating = *value;
      return;
    }
  }
}

}  // namespace

LoadResult parse_records(std::istream& in, const ColumnMap& columns, bool require_label) {
  CsvReader reader(in);
  auto header = reader.next();
  if (!header) throw IngestError("missing header row");

  std::unordered_map<std::string, std::size_t> by_header;
  for (std::size_t i = 0; i < header->size(); ++i) {
    by_header.emplace(normalize_key((*header)[i]), i);
  }

  std::vector<std::pair<Field, std::size_t>> layout;
  std::vector<std::string> missing;
  for (Field f : kAllFields) {
    auto it = by_header.find(normalize_key(columns.header(f)));
    if (it != by_header.end()) {
      layout.emplace_back(f, it->second);
    } else if (column_required(f) && (require_label || f != Field::ComprehensiveRating)) {
      missing.push_back(columns.header(f));
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing required columns:";
    for (const auto& m : missing) msg += " " + m;
    throw IngestError(msg);
  }

  LoadResult result;
  std::unordered_map<std::string, std::size_t> first_seen;
  while (auto row = reader.next()) {
    const std::size_t line = reader.line();
    if (row->size() != header->size()) {
      result.diagnostics.push_back({line, "",
                                    "expected " + std::to_string(header->size()) +
                                        " fields, found " + std::to_string(row->size())});
      continue;
    }
    PipeRecord record;
    try {
      for (const auto& [field, index] : layout) assign(record, field, (*row)[index], require_label);
      if (record.pipe_id.empty()) throw RowError{"missing pipe_id"};
    } catch (const RowError& e) {
      result.diagnostics.push_back({line, record.pipe_id, e.cause});
      continue;
    }
    auto [it, inserted] = first_seen.emplace(record.pipe_id, line);
    if (!inserted) {
      result.diagnostics.push_back(
          {line, record.pipe_id,
           "duplicate pipe_id (first seen on line " + std::to_string(it->second) + ")"});
      continue;
    }
    result.records.push_back(std::move(record));
  }
  return result;
}

LoadResult load_records(const std::filesystem::path& path, const ColumnMap& columns, bool require_label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot read '" + path.string() + "'");
  return parse_records(in, columns, require_label);
}

std::string write_records_csv(std::span<const PipeRecord> records, const ColumnMap& columns) {
  std::vector<std::string> header;
  for (Field f : kAllFields) header.push_back(columns.header(f));
  std::string out = csv_row(header);
  std::vector<std::string> row;
  for (const auto& r : records) {
    row.clear();
    for (Field f : kAllFields) row.push_back(text_value(r, f).value_or(""));
    out += csv_row(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cleaning

namespace {

struct ComparisonName {
  Comparison op;
  std::string_view symbol;
};

constexpr std::array<ComparisonName, 6> kComparisons = {{
    {Comparison::Less, "<"},
    {Comparison::LessEqual, "<="},
    {Comparison::Greater, ">"},
    {Comparison::GreaterEqual, ">="},
    {Comparison::Equal, "=="},
    {Comparison::NotEqual, "!="},
}};

std::string_view symbol(Comparison op) {
  for (const auto& c : kComparisons) {
    if (c.op == op) return c.symbol;
  }
  return "?";
}

Comparison parse_comparison(std::string_view text) {
  for (const auto& c : kComparisons) {
    if (c.symbol == text) return c.op;
  }
  throw Error("unknown comparison '" + std::string(text) + "'");
}

bool compare(double lhs, Comparison op, double rhs) {
  switch (op) {
    case Comparison::Less: return lhs < rhs;
    case Comparison::LessEqual: return lhs <= rhs;
    case Comparison::Greater: return lhs > rhs;
    case Comparison::GreaterEqual: return lhs >= rhs;
    case Comparison::Equal: return lhs == rhs;
    case Comparison::NotEqual: return lhs != rhs;
  }
  return false;
}

std::string describe_range(const RangeRule& rule) {
  std::string out = rule.min ? (rule.min_inclusive ? "[" : "(") + format_number(*rule.min) : "(-inf";
  out += ", ";
  out += rule.max ? format_number(*rule.max) + (rule.max_inclusive ? "]" : ")") : "inf)";
  return out;
}

bool in_range(const RangeRule& rule, double v) {
  if (rule.min && (rule.min_inclusive ? v < *rule.min : v <= *rule.min)) return false;
  if (rule.max && (rule.max_inclusive ? v > *rule.max : v >= *rule.max)) return false;
  return true;
}

}  // namespace

ValidationConfig ValidationConfig::defaults() {
  ValidationConfig cfg;
  cfg.required.assign(kFactorFields.begin(), kFactorFields.end());
  cfg.max_missing = 0;
  cfg.ranges = {
      {Field::PipeAge, 0.0, true, 200.0, true},
      {Field::Diameter, 0.0, false, 240.0, true},
      {Field::TotalLength, 0.0, false, std::nullopt, true},
      {Field::LengthSurveyed, 0.0, true, std::nullopt, true},
  };
  cfg.depth_categories = pipegrade::depth_categories();
  cfg.cross_field = {{Field::LengthSurveyed, Comparison::LessEqual, Field::TotalLength}};
  return cfg;
}

ValidationConfig ValidationConfig::from_json(const json& doc) {
  ValidationConfig cfg = defaults();
  if (doc.contains("required")) {
    cfg.required.clear();
    for (const auto& name : doc.at("required")) cfg.required.push_back(parse_field(name.get<std::string>()));
  }
  if (doc.contains("max_missing")) cfg.max_missing = doc.at("max_missing").get<std::size_t>();
  if (doc.contains("ranges")) {
    cfg.ranges.clear();
    for (const auto& r : doc.at("ranges")) {
      RangeRule rule{};
      rule.field = parse_field(r.at("field").get<std::string>());
      if (r.contains("min") && !r.at("min").is_null()) rule.min = r.at("min").get<double>();
      if (r.contains("max") && !r.at("max").is_null()) rule.max = r.at("max").get<double>();
      rule.min_inclusive = r.value("min_inclusive", true);
      rule.max_inclusive = r.value("max_inclusive", true);
      if (field_type(rule.field) == FieldType::Text) {
        throw Error("range rule on non-numeric field '" + std::string(field_name(rule.field)) + "'");
      }
      cfg.ranges.push_back(rule);
    }
  }
  if (doc.contains("depth_categories")) {
    cfg.depth_categories = doc.at("depth_categories").get<std::vector<std::string>>();
  }
  if (doc.contains("cross_field")) {
    cfg.cross_field.clear();
    for (const auto& c : doc.at("cross_field")) {
      cfg.cross_field.push_back({parse_field(c.at("lhs").get<std::string>()),
                                 parse_comparison(c.at("op").get<std::string>()),
                                 parse_field(c.at("rhs").get<std::string>())});
    }
  }
  return cfg;
}

ValidationConfig ValidationConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error("invalid rules file '" + path.string() + "': " + e.what());
  }
}

json ValidationConfig::to_json() const {
  json doc;
  doc["required"] = json::array();
  for (Field f : required) doc["required"].push_back(field_name(f));
  doc["max_missing"] = max_missing;
  doc["ranges"] = json::array();
  for (const auto& r : ranges) {
    json j{{"field", field_name(r.field)},
           {"min_inclusive", r.min_inclusive},
           {"max_inclusive", r.max_inclusive}};
    j["min"] = r.min ? json(*r.min) : json(nullptr);
    j["max"] = r.max ? json(*r.max) : json(nullptr);
    doc["ranges"].push_back(j);
  }
  doc["depth_categories"] = depth_categories;
  doc["cross_field"] = json::array();
  for (const auto& c : cross_field) {
    doc["cross_field"].push_back({{"lhs", field_name(c.lhs)}, {"op", symbol(c.op)}, {"rhs", field_name(c.rhs)}});
  }
  return doc;
}

std::optional<DropRecord> check_record(const PipeRecord& record, const ValidationConfig& rules) {
  std::vector<std::string> absent;
  for (Field f : rules.required) {
    if (!has_value(record, f)) absent.emplace_back(field_name(f));
  }
  if (absent.size() > rules.max_missing) {
    std::string detail = "missing:";
    for (const auto& a : absent) detail += " " + a;
    return DropRecord{record.pipe_id, DropReason::Missing, detail};
  }

  for (const auto& rule : rules.ranges) {
    auto v = numeric_value(record, rule.field);
    if (v && !in_range(rule, *v)) {
      return DropRecord{record.pipe_id, DropReason::Inconsistent,
                        std::string(field_name(rule.field)) + "=" + format_number(*v) +
                            " outside " + describe_range(rule)};
    }
  }

  if (!rules.depth_categories.empty() && record.depth) {
    const auto& cats = rules.depth_categories;
    if (std::find(cats.begin(), cats.end(), *record.depth) == cats.end()) {
      return DropRecord{record.pipe_id, DropReason::Inconsistent,
                        "depth '" + *record.depth + "' is not a known category"};
    }
  }

  for (const auto& rule : rules.cross_field) {
    auto lhs = numeric_value(record, rule.lhs);
    auto rhs = numeric_value(record, rule.rhs);
    if (lhs && rhs && !compare(*lhs, rule.op, *rhs)) {
      return DropRecord{record.pipe_id, DropReason::Inconsistent,
                        std::string(field_name(rule.lhs)) + "=" + format_number(*lhs) + " violates " +
                            std::string(symbol(rule.op)) + " " + std::string(field_name(rule.rhs)) +
                            "=" + format_number(*rhs)};
    }
  }
  return std::nullopt;
}

CleanResult clean(std::span<const PipeRecord> records, const ValidationConfig& rules) {
  CleanResult out;
  out.report.total_in = records.size();
  for (const auto& record : records) {
    if (auto drop = check_record(record, rules)) {
      if (drop->reason == DropReason::Missing) {
        ++out.report.dropped_missing;
      } else {
        ++out.report.dropped_inconsistent;
      }
      out.report.drops.push_back(std::move(*drop));
    } else {
      out.retained.push_back(record);
    }
  }
  out.report.retained = out.retained.size();
  return out;
}

std::string_view to_string(DropReason reason) {
  return reason == DropReason::Missing ? "missing" : "inconsistent";
}

json to_json(const CleaningReport& report) {
  json doc{{"total_in", report.total_in},
           {"dropped_missing", report.dropped_missing},
           {"dropped_inconsistent", report.dropped_inconsistent},
           {"retained", report.retained}};
  doc["drops"] = json::array();
  for (const auto& d : report.drops) {
    doc["drops"].push_back({{"pipe_id", d.pipe_id}, {"reason", to_string(d.reason)}, {"detail", d.detail}});
  }
  return doc;
}

std::string render_text(const CleaningReport& report) {
  std::ostringstream out;
  out << "Cleaning report\n";
  out << "  records in              " << report.total_in << "\n";
  out << "  dropped (missing)       " << report.dropped_missing << "\n";
  out << "  dropped (inconsistent)  " << report.dropped_inconsistent << "\n";
  out << "  retained                " << report.retained << "\n";
  if (!report.drops.empty()) {
    out << "\nDropped records\n";
    for (const auto& d : report.drops) {
      out << "  " << d.pipe_id << "  " << to_string(d.reason) << "  " << d.detail << "\n";
    }
  }
  return out.str();
}

}  // namespace pipegrade
