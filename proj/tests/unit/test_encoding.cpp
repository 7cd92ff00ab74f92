#include <doctest.h>

#include "helpers.hpp"
#include "pipegrade/encoding.hpp"

using namespace pipegrade;
using nlohmann::json;

namespace {

const FactorSchema& schema() { return FactorSchema::builtin(); }

PipeRecord valid_record(const std::string& id = "1") {
  auto r = test::parse(test::header() + test::row(id)).records;
  REQUIRE(r.size() == 1);
  return r[0];
}

int rank_of(const FeatureVector& v, const std::string& factor) {
  return v.ranks.at(*schema().index_of(factor));
}

json schema_doc() { return schema().to_json(); }

}  // namespace

TEST_CASE("builtin schema groups twelve factors as 4 + 5 + 3") {
  const auto& f = schema().factors();
  REQUIRE(f.size() == 12);
  int pc = 0, ec = 0, hc = 0;
  for (const auto& d : f) {
    pc += d.group == CriteriaGroup::Physical;
    ec += d.group == CriteriaGroup::External;
    hc += d.group == CriteriaGroup::Hydraulic;
  }
  CHECK(pc == 4);
  CHECK(ec == 5);
  CHECK(hc == 3);
  CHECK(schema().factor_names().front() == "age");
  CHECK(schema().factor_names().back() == "repair_history");
}

TEST_CASE("shipped schema file and the embedded copy agree") {
  const auto file = FactorSchema::load(test::data_dir() / "schema" / "default_schema.json");
  CHECK(file.to_json() == schema().to_json());
}

TEST_CASE("age bands follow their inequality directions") {
  const auto& age = schema().factor("age");
  CHECK(rank_numeric(age, 0) == 1);
  CHECK(rank_numeric(age, 9.99) == 1);
  CHECK(rank_numeric(age, 10) == 2);
  CHECK(rank_numeric(age, 25) == 3);
  CHECK(rank_numeric(age, 30) == 3);
  CHECK(rank_numeric(age, 40) == 4);
  CHECK(rank_numeric(age, 50) == 5);
  CHECK(rank_numeric(age, 500) == 5);
  CHECK_FALSE(rank_numeric(age, -1));
}

TEST_CASE("diameter bands cover every positive size") {
  const auto& d = schema().factor("diameter");
  CHECK(rank_numeric(d, 8) == 5);
  CHECK(rank_numeric(d, 11) == 5);
  CHECK(rank_numeric(d, 11.5) == 4);
  CHECK(rank_numeric(d, 18) == 4);
  CHECK(rank_numeric(d, 30.5) == 3);
  CHECK(rank_numeric(d, 31) == 3);
  CHECK(rank_numeric(d, 48) == 2);
  CHECK(rank_numeric(d, 48.5) == 1);
  CHECK_FALSE(rank_numeric(d, 0));
}

TEST_CASE("record encodes to the schema ranks") {
  auto r = valid_record();
  r.pipe_age_years = 30;
  r.material = "Vitrified Clay Pipe";
  r.structural_score = 4;
  r.om_score = 4;
  const auto v = encode(r, schema());
  CHECK(rank_of(v, "age") == 3);
  CHECK(rank_of(v, "material") == 1);
  CHECK(rank_of(v, "diameter") == 5);
  CHECK(rank_of(v, "shape") == 1);
  CHECK(rank_of(v, "depth") == 1);
  CHECK(rank_of(v, "structural_score") == 4);
  CHECK(rank_of(v, "om_score") == 4);
  CHECK(v.label == 3);
  r.pipe_age_years = 0;
  CHECK(rank_of(encode(r, schema()), "age") == 1);
}

TEST_CASE("categories match case-insensitively after trimming") {
  const auto& repair = schema().factor("repair_history");
  CHECK(rank_category(repair, "  EXTREME   maintenance ") == 5);
  CHECK(rank_category(schema().factor("seismic_zone"), "zone 3") == 3);
  CHECK_FALSE(rank_category(repair, "sometimes"));
}

TEST_CASE("unknown material maps to the worst rank with a note") {
  auto r = valid_record("m");
  r.material = "Unobtainium";
  std::vector<EncodingIssue> notes;
  const auto v = encode(r, schema(), &notes);
  CHECK(rank_of(v, "material") == 5);
  REQUIRE(notes.size() == 1);
  CHECK(notes[0].factor == "material");
  CHECK(notes[0].value == "Unobtainium");
}

TEST_CASE("strict factors reject unknown values naming factor and value") {
  auto r = valid_record("s");
  r.soil_type = "Martian regolith";
  try {
    encode(r, schema());
    FAIL("expected an encoding error");
  } catch (const EncodingError& e) {
    REQUIRE(e.issues().size() == 1);
    CHECK(e.issues()[0].pipe_id == "s");
    CHECK(e.issues()[0].factor == "soil_type");
    CHECK(e.issues()[0].value == "Martian regolith");
  }
}

TEST_CASE("dataset encoding lists every offending record") {
  std::vector<PipeRecord> records{valid_record("a"), valid_record("b"), valid_record("c")};
  records[0].soil_type = "bad";
  records[2].shape = "Hexagonal";
  try {
    encode_dataset(records, schema());
    FAIL("expected an encoding error");
  } catch (const EncodingError& e) {
    REQUIRE(e.issues().size() == 2);
    CHECK(e.issues()[0].pipe_id == "a");
    CHECK(e.issues()[1].pipe_id == "c");
  }
  CHECK(encode_dataset(std::vector<PipeRecord>{}, schema()).rows.empty());
}

TEST_CASE("missing values fail encoding") {
  auto r = valid_record();
  r.om_score.reset();
  CHECK_THROWS_AS(encode(r, schema()), EncodingError);
}

TEST_CASE("projection keeps order, labels and rejects bad keep sets") {
  const std::vector<PipeRecord> records{valid_record("a"), valid_record("b")};
  const auto data = encode_dataset(records, schema());
  CHECK(project(data, schema().factor_names()).rows == data.rows);

  std::set<std::string> ten(data.factors.begin(), data.factors.end());
  ten.erase("diameter");
  ten.erase("seismic_zone");
  const auto p = project(data, ten);
  CHECK(p.factors.size() == 10);
  CHECK(p.factors[2] == "shape");
  CHECK(p.rows[0].ranks.size() == 10);
  CHECK(p.rows[1].label == data.rows[1].label);

  CHECK_THROWS_WITH_AS(project(data, std::set<std::string>{}), "empty projection", SchemaError);
  CHECK_THROWS_AS(project(data, std::set<std::string>{"colour"}), SchemaError);
}

TEST_CASE("numeric factors are monotone in the raw value") {
  const auto& age = schema().factor("age");
  const auto& diameter = schema().factor("diameter");
  int prev_age = 0;
  int prev_diam = 6;
  for (double x = 0.25; x < 150; x += 0.25) {
    const int a = *rank_numeric(age, x);
    const int d = *rank_numeric(diameter, x);
    CHECK(a >= prev_age);
    CHECK(d <= prev_diam);
    prev_age = a;
    prev_diam = d;
  }
  const std::vector<double> feet{0, 4, 10, 10.5, 15, 17, 20, 22, 25, 26, 40};
  int prev_depth = 0;
  for (double f : feet) {
    const int r = *rank_category(schema().factor("depth"), depth_category_for_feet(f));
    CHECK(r >= prev_depth);
    prev_depth = r;
  }
}

TEST_CASE("vectors csv round-trips") {
  const std::vector<PipeRecord> records{valid_record("a"), valid_record("b")};
  const auto data = encode_dataset(records, schema());
  const auto back = read_vectors_csv(write_vectors_csv(data));
  CHECK(back.factors == data.factors);
  CHECK(back.rows == data.rows);
}

TEST_CASE("schema validation rejects malformed definitions") {
  SUBCASE("eleven factors") {
    auto doc = schema_doc();
    doc["factors"].erase(doc["factors"].size() - 1);
    CHECK_THROWS_AS(FactorSchema::from_json(doc), SchemaError);
  }
  SUBCASE("gap between bands") {
    auto doc = schema_doc();
    doc["factors"][0]["bands"][1]["lower"] = 11;
    CHECK_THROWS_AS(FactorSchema::from_json(doc), SchemaError);
  }
  SUBCASE("edge left in no band") {
    auto doc = schema_doc();
    doc["factors"][0]["bands"][1]["lower_inclusive"] = false;
    doc["factors"][0]["bands"][0]["upper_inclusive"] = false;
    CHECK_THROWS_AS(FactorSchema::from_json(doc), SchemaError);
  }
  SUBCASE("rank out of range") {
    auto doc = schema_doc();
    doc["factors"][3]["categories"][0]["rank"] = 6;
    CHECK_THROWS_AS(FactorSchema::from_json(doc), SchemaError);
  }
  SUBCASE("duplicate name") {
    auto doc = schema_doc();
    doc["factors"][1]["name"] = "age";
    CHECK_THROWS_AS(FactorSchema::from_json(doc), SchemaError);
  }
  SUBCASE("kind does not fit field") {
    auto doc = schema_doc();
    doc["factors"][1]["kind"] = "numeric_banded";
    CHECK_THROWS_AS(FactorSchema::from_json(doc), SchemaError);
  }
  SUBCASE("unbounded band that is not last") {
    auto doc = schema_doc();
    doc["factors"][0]["bands"][3].erase("upper");
    CHECK_THROWS_AS(FactorSchema::from_json(doc), SchemaError);
  }
}

TEST_CASE("rebanding through the schema file changes ranks without code") {
  auto doc = schema_doc();
  doc["factors"][0]["bands"][4]["lower"] = 45;
  doc["factors"][0]["bands"][3]["upper"] = 45;
  const auto custom = FactorSchema::from_json(doc);
  CHECK(rank_numeric(custom.factor("age"), 47) == 5);
  CHECK(rank_numeric(schema().factor("age"), 47) == 4);
}
