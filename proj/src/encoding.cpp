#include "pipegrade/encoding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "pipegrade/io.hpp"

namespace pipegrade {

using nlohmann::json;

namespace detail {
extern const char* const kDefaultSchemaJson;
}

bool Band::contains(double value) const {
  if (lower_inclusive ? value < lower : value <= lower) return false;
  if (upper && (upper_inclusive ? value > *upper : value >= *upper)) return false;
  return true;
}

std::string_view to_string(CriteriaGroup group) {
  switch (group) {
    case CriteriaGroup::Physical: return "PC";
    case CriteriaGroup::External: return "EC";
    case CriteriaGroup::Hydraulic: return "HC";
  }
  return "?";
}

std::string_view to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::NumericBanded: return "numeric_banded";
    case FactorKind::Categorical: return "categorical";
    case FactorKind::PassThrough: return "pass_through";
  }
  return "?";
}

namespace {

CriteriaGroup parse_group(const std::string& text) {
  if (text == "PC") return CriteriaGroup::Physical;
  if (text == "EC") return CriteriaGroup::External;
  if (text == "HC") return CriteriaGroup::Hydraulic;
  throw SchemaError("unknown criteria group '" + text + "' (expected PC, EC or HC)");
}

FactorKind parse_kind(const std::string& text) {
  if (text == "numeric_banded") return FactorKind::NumericBanded;
  if (text == "categorical") return FactorKind::Categorical;
  if (text == "pass_through") return FactorKind::PassThrough;
  throw SchemaError("unknown factor kind '" + text + "'");
}

UnknownPolicy parse_policy(const std::string& text) {
  if (text == "strict") return UnknownPolicy::Strict;
  if (text == "map_to_worst") return UnknownPolicy::MapToWorst;
  throw SchemaError("unknown unknown-value policy '" + text + "'");
}

std::string fail(const FactorDef& f, const std::string& what) { return "factor '" + f.name + "': " + what; }

}  // namespace

FactorSchema FactorSchema::from_json(const json& doc) {
  FactorSchema schema;
  try {
    schema.name_ = doc.value("name", std::string("custom"));
    for (const auto& jf : doc.at("factors")) {
      FactorDef f;
      f.name = jf.at("name").get<std::string>();
      f.display = jf.value("display", f.name);
      f.group = parse_group(jf.at("group").get<std::string>());
      f.field = parse_field(jf.at("field").get<std::string>());
      f.kind = parse_kind(jf.at("kind").get<std::string>());
      f.unknown = parse_policy(jf.value("unknown", std::string("strict")));
      if (f.kind == FactorKind::NumericBanded) {
        const auto& dom = jf.at("domain");
        f.domain_min = dom.at("min").get<double>();
        f.domain_min_inclusive = dom.value("min_inclusive", true);
        for (const auto& jb : jf.at("bands")) {
          Band b;
          b.lower = jb.at("lower").get<double>();
          b.lower_inclusive = jb.value("lower_inclusive", true);
          if (jb.contains("upper") && !jb.at("upper").is_null()) b.upper = jb.at("upper").get<double>();
          b.upper_inclusive = jb.value("upper_inclusive", false);
          b.rank = jb.at("rank").get<int>();
          b.text = jb.value("text", std::string());
          f.bands.push_back(std::move(b));
        }
        std::sort(f.bands.begin(), f.bands.end(),
                  [](const Band& a, const Band& b) { return a.lower < b.lower; });
      } else if (f.kind == FactorKind::Categorical) {
        for (const auto& jc : jf.at("categories")) {
          f.categories.push_back({jc.at("value").get<std::string>(), jc.at("rank").get<int>()});
        }
      }
      schema.factors_.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(e.what());
  }
  schema.source_ = doc;
  schema.validate();
  return schema;
}

FactorSchema FactorSchema::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw SchemaError("schema file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

const FactorSchema& FactorSchema::builtin() {
  static const FactorSchema kBuiltin = from_json(json::parse(detail::kDefaultSchemaJson));
  return kBuiltin;
}

json FactorSchema::to_json() const { return source_; }

void FactorSchema::validate() const {
  if (factors_.size() != 12) {
    throw SchemaError("schema must define exactly 12 factors, found " + std::to_string(factors_.size()));
  }
  std::map<CriteriaGroup, int> per_group;
  std::set<std::string> names;
  for (const auto& f : factors_) {
    ++per_group[f.group];
    if (!names.insert(f.name).second) throw SchemaError("duplicate factor name '" + f.name + "'");

    const FieldType ft = field_type(f.field);
    const bool field_ok = (f.kind == FactorKind::NumericBanded && ft == FieldType::Number) ||
                          (f.kind == FactorKind::Categorical && ft == FieldType::Text &&
                           f.field != Field::PipeId) ||
                          (f.kind == FactorKind::PassThrough && ft == FieldType::Score &&
                           f.field != Field::ComprehensiveRating);
    if (!field_ok) {
      throw SchemaError(fail(f, std::string(to_string(f.kind)) + " cannot read field '" +
                                    std::string(field_name(f.field)) + "'"));
    }

    if (f.kind == FactorKind::NumericBanded) {
      if (f.bands.empty()) throw SchemaError(fail(f, "no bands"));
      const Band& first = f.bands.front();
      if (first.lower != f.domain_min || first.lower_inclusive != f.domain_min_inclusive) {
        throw SchemaError(fail(f, "first band does not start at the domain minimum"));
      }
      for (std::size_t i = 0; i < f.bands.size(); ++i) {
        const Band& b = f.bands[i];
        if (b.rank < 1 || b.rank > kNumRatings) throw SchemaError(fail(f, "band rank outside 1-5"));
        const bool last = i + 1 == f.bands.size();
        if (last) {
          if (b.upper) throw SchemaError(fail(f, "last band must be unbounded above"));
          break;
        }
        const Band& next = f.bands[i + 1];
        if (!b.upper || *b.upper != next.lower) {
          throw SchemaError(fail(f, "bands are not contiguous at " + format_number(next.lower)));
        }
        if (b.upper_inclusive == next.lower_inclusive) {
          throw SchemaError(fail(f, "edge " + format_number(next.lower) +
                                        (b.upper_inclusive ? " belongs to two bands" : " belongs to no band")));
        }
        if (!(b.lower < *b.upper)) throw SchemaError(fail(f, "empty band"));
      }
    } else if (f.kind == FactorKind::Categorical) {
      if (f.categories.empty()) throw SchemaError(fail(f, "no categories"));
      std::set<std::string> keys;
      for (const auto& c : f.categories) {
        if (c.rank < 1 || c.rank > kNumRatings) throw SchemaError(fail(f, "category rank outside 1-5"));
        if (!keys.insert(normalize_key(c.value)).second) {
          throw SchemaError(fail(f, "duplicate category '" + c.value + "'"));
        }
      }
    }
  }
  if (per_group[CriteriaGroup::Physical] != 4 || per_group[CriteriaGroup::External] != 5 ||
      per_group[CriteriaGroup::Hydraulic] != 3) {
    throw SchemaError("factors must be grouped 4 PC + 5 EC + 3 HC");
  }
}

std::vector<std::string> FactorSchema::factor_names() const {
  std::vector<std::string> out;
  for (const auto& f : factors_) out.push_back(f.name);
  return out;
}

std::optional<std::size_t> FactorSchema::index_of(std::string_view factor) const {
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].name == factor) return i;
  }
  return std::nullopt;
}

const FactorDef& FactorSchema::factor(std::string_view name) const {
  if (auto i = index_of(name)) return factors_[*i];
  throw SchemaError("unknown factor '" + std::string(name) + "'");
}

std::optional<int> rank_numeric(const FactorDef& factor, double value) {
  for (const auto& band : factor.bands) {
    if (band.contains(value)) return band.rank;
  }
  return std::nullopt;
}

std::optional<int> rank_category(const FactorDef& factor, std::string_view value) {
  const std::string key = normalize_key(value);
  for (const auto& c : factor.categories) {
    if (normalize_key(c.value) == key) return c.rank;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

EncodingError::EncodingError(std::vector<EncodingIssue> issues)
    : Error([&] {
        std::ostringstream msg;
        msg << "encoding failed with " << issues.size() << " issue(s)";
        std::size_t shown = 0;
        for (const auto& i : issues) {
          if (shown++ == 10) {
            msg << "; ...";
            break;
          }
          msg << "; pipe " << i.pipe_id << " " << i.factor << "='" << i.value << "': " << i.message;
        }
        return msg.str();
      }()),
      issues_(std::move(issues)) {}

namespace {

void encode_into(const PipeRecord& record, const FactorSchema& schema, FeatureVector& out,
                 std::vector<EncodingIssue>& errors, std::vector<EncodingIssue>* notes, bool require_label) {
  out.pipe_id = record.pipe_id;
  out.label = record.comprehensive_rating;
  out.ranks.clear();
  out.ranks.reserve(schema.factors().size());
  for (const auto& f : schema.factors()) {
    const auto raw = text_value(record, f.field);
    if (!raw) {
      errors.push_back({record.pipe_id, f.name, "", "value is missing"});
      out.ranks.push_back(0);
      continue;
    }
    std::optional<int> rank;
    switch (f.kind) {
      case FactorKind::NumericBanded:
        rank = rank_numeric(f, *numeric_value(record, f.field));
        break;
      case FactorKind::Categorical:
        rank = rank_category(f, *raw);
        break;
      case FactorKind::PassThrough: {
        const int score = static_cast<int>(*numeric_value(record, f.field));
        if (is_rating(score)) rank = score;
        break;
      }
    }
    if (!rank) {
      if (f.unknown == UnknownPolicy::MapToWorst) {
        rank = kNumRatings;
        if (notes) notes->push_back({record.pipe_id, f.name, *raw, "unrecognized value mapped to rank 5"});
      } else {
        errors.push_back({record.pipe_id, f.name, *raw,
                          f.kind == FactorKind::NumericBanded ? "no band contains value"
                                                              : "no matching category"});
        rank = 0;
      }
    }
    out.ranks.push_back(*rank);
  }
  if (!is_rating(out.label) && (require_label || out.label != 0)) {
    errors.push_back({record.pipe_id, "comprehensive_rating", std::to_string(out.label), "label out of range 1–5"});
  }
}

}  // namespace

FeatureVector encode(const PipeRecord& record, const FactorSchema& schema, std::vector<EncodingIssue>* notes,
                     bool require_label) {
  FeatureVector out;
  std::vector<EncodingIssue> errors;
  encode_into(record, schema, out, errors, notes, require_label);
  if (!errors.empty()) throw EncodingError(std::move(errors));
  return out;
}

EncodedDataset encode_dataset(std::span<const PipeRecord> records, const FactorSchema& schema,
                              bool require_label) {
  EncodedDataset data;
  data.factors = schema.factor_names();
  data.rows.resize(records.size());
  std::vector<EncodingIssue> errors;
  for (std::size_t i = 0; i < records.size(); ++i) {
    encode_into(records[i], schema, data.rows[i], errors, &data.notes, require_label);
  }
  if (!errors.empty()) throw EncodingError(std::move(errors));
  return data;
}

EncodedDataset project(const EncodedDataset& data, const std::set<std::string>& keep) {
  if (keep.empty()) throw SchemaError("empty projection");
  for (const auto& name : keep) {
    if (std::find(data.factors.begin(), data.factors.end(), name) == data.factors.end()) {
      throw SchemaError("unknown factor '" + name + "' in projection");
    }
  }
  std::vector<std::size_t> columns;
  EncodedDataset out;
  out.notes = data.notes;
  for (std::size_t i = 0; i < data.factors.size(); ++i) {
    if (keep.contains(data.factors[i])) {
      columns.push_back(i);
      out.factors.push_back(data.factors[i]);
    }
  }
  out.rows.reserve(data.rows.size());
  for (const auto& row : data.rows) {
    FeatureVector v{row.pipe_id, {}, row.label};
    v.ranks.reserve(columns.size());
    for (std::size_t c : columns) v.ranks.push_back(row.ranks.at(c));
    out.rows.push_back(std::move(v));
  }
  return out;
}

EncodedDataset project(const EncodedDataset& data, const std::vector<std::string>& keep) {
  return project(data, std::set<std::string>(keep.begin(), keep.end()));
}

std::string write_vectors_csv(const EncodedDataset& data) {
  std::vector<std::string> header{"pipe_id"};
  header.insert(header.end(), data.factors.begin(), data.factors.end());
  header.push_back("label");
  std::string out = csv_row(header);
  std::vector<std::string> row;
  for (const auto& v : data.rows) {
    row.assign({v.pipe_id});
    for (int r : v.ranks) row.push_back(std::to_string(r));
    row.push_back(std::to_string(v.label));
    out += csv_row(row);
  }
  return out;
}

EncodedDataset read_vectors_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  CsvReader reader(in);
  auto header = reader.next();
  if (!header || header->size() < 3 || header->front() != "pipe_id" || header->back() != "label") {
    throw Error("vector CSV must have header pipe_id,<factors...>,label");
  }
  EncodedDataset data;
  data.factors.assign(header->begin() + 1, header->end() - 1);
  while (auto row = reader.next()) {
    if (row->size() != header->size()) {
      throw Error("vector CSV line " + std::to_string(reader.line()) + ": wrong field count");
    }
    FeatureVector v;
    v.pipe_id = row->front();
    try {
      for (std::size_t i = 1; i + 1 < row->size(); ++i) v.ranks.push_back(std::stoi((*row)[i]));
      v.label = std::stoi(row->back());
    } catch (const std::exception&) {
      throw Error("vector CSV line " + std::to_string(reader.line()) + ": non-integer rank");
    }
    data.rows.push_back(std::move(v));
  }
  return data;
}

}  // namespace pipegrade
