#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "pipegrade/ingest.hpp"
#include "pipegrade/screening.hpp"
#include "pipegrade/synthgen.hpp"

using namespace pipegrade;

namespace {

std::map<Rating, std::size_t> label_counts(const std::vector<PipeRecord>& records) {
  std::map<Rating, std::size_t> out;
  for (const auto& r : records) ++out[r.comprehensive_rating];
  return out;
}

}  // namespace

TEST_CASE("presets are valid") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    CHECK_NOTHROW(preset(name).validate(FactorSchema::builtin()));
  }
  CHECK_THROWS_AS(preset("nope"), GenError);
}

TEST_CASE("generation is deterministic per seed") {
  auto spec = preset("field_mix");
  spec.n = 300;
  const auto a = write_records_csv(generate(spec).records);
  const auto b = write_records_csv(generate(spec).records);
  CHECK(a == b);
  spec.seed += 1;
  CHECK(write_records_csv(generate(spec).records) != a);
}

TEST_CASE("class counts follow the distribution") {
  GenSpec spec = preset("field_mix");
  spec.label_noise = 0;
  for (std::size_t n : {37u, 500u, 1240u}) {
    spec.n = n;
    const auto g = generate(spec);
    REQUIRE(g.records.size() == n);
    const auto counts = label_counts(g.records);
    for (Rating c = 1; c <= 5; ++c) {
      const double expected = spec.class_distribution[static_cast<std::size_t>(c - 1)] * static_cast<double>(n);
      CHECK(std::abs(static_cast<double>(counts.count(c) ? counts.at(c) : 0) - expected) <= 1.0);
    }
  }
}

TEST_CASE("planted rule holds on noiseless records") {
  GenSpec spec = preset("field_mix");
  spec.label_noise = 0;
  spec.n = 400;
  const auto g = generate(spec);
  const auto& schema = FactorSchema::builtin();
  const auto data = encode_dataset(g.records, schema);
  const auto s = *schema.index_of("structural_score");
  const auto o = *schema.index_of("om_score");
  const auto r = *schema.index_of("repair_history");
  for (const auto& v : data.rows) {
    CHECK(hc_rule(spec.rule_weights, v.ranks[s], v.ranks[o], v.ranks[r]) == v.label);
  }
  CHECK(g.planted.size() == g.records.size());
}

TEST_CASE("hc rule rounds and clamps") {
  const std::array<double, 3> w{0.4, 0.4, 0.2};
  CHECK(hc_rule(w, 1, 1, 1) == 1);
  CHECK(hc_rule(w, 5, 5, 5) == 5);
  CHECK(hc_rule(w, 3, 3, 3) == 3);
  CHECK(hc_rule({2, 2, 2}, 5, 5, 5) == 5);
  CHECK(hc_rule({0, 0, 0.1}, 1, 1, 1) == 1);
}

TEST_CASE("label noise flips an exact number of records") {
  GenSpec spec = preset("field_mix");
  spec.n = 500;
  spec.label_noise = 0.2;
  const auto g = generate(spec);
  CHECK(g.noisy_ids.size() == 100);
  std::set<std::string> noisy(g.noisy_ids.begin(), g.noisy_ids.end());
  for (std::size_t i = 0; i < g.records.size(); ++i) {
    const bool flipped = g.records[i].comprehensive_rating != g.planted[i];
    CHECK(flipped == (noisy.count(g.records[i].pipe_id) == 1));
  }
}

TEST_CASE("injected defects are dropped exactly") {
  const auto g = generate(preset("defects_3100"));
  REQUIRE(g.records.size() == 3100);
  CHECK(g.missing_ids.size() == 60);
  CHECK(g.inconsistent_ids.size() == 70);
  const auto c = clean(g.records);
  CHECK(c.report.dropped_missing == 60);
  CHECK(c.report.dropped_inconsistent == 70);
  CHECK(c.report.retained == 2970);
  std::set<std::string> missing(g.missing_ids.begin(), g.missing_ids.end());
  std::set<std::string> inconsistent(g.inconsistent_ids.begin(), g.inconsistent_ids.end());
  for (const auto& d : c.report.drops) {
    if (d.reason == DropReason::Missing) CHECK(missing.count(d.pipe_id) == 1);
    else CHECK(inconsistent.count(d.pipe_id) == 1);
  }
  // Everything left encodes without error.
  CHECK_NOTHROW(encode_dataset(c.retained, FactorSchema::builtin()));
}

TEST_CASE("generated CSV parses back") {
  GenSpec spec = preset("defects_3100");
  spec.n = 400;
  spec.missing_count = 10;
  spec.inconsistent_count = 10;
  const auto g = generate(spec);
  std::istringstream in(write_records_csv(g.records));
  const auto parsed = parse_records(in);
  CHECK(parsed.records.size() == 400);
  CHECK(write_records_csv(parsed.records) == write_records_csv(g.records));
}

TEST_CASE("constant columns are dropped by screening at full size") {
  const auto g = generate(preset("field_mix"));
  const auto c = clean(g.records);
  const auto data = encode_dataset(c.retained, FactorSchema::builtin());
  const auto r = screen(data, kDefaultAlpha);
  for (const auto& res : r.results) {
    if (res.factor == "diameter" || res.factor == "seismic_zone") {
      CHECK(res.stat.degenerate);
      CHECK(res.verdict == Verdict::Drop);
    } else {
      CHECK_FALSE(res.stat.degenerate);
      CHECK((res.verdict == Verdict::Keep) == (res.stat.p_value > kDefaultAlpha));
    }
  }
  CHECK(screen(data, 0.0).retained.size() == 10);
}

TEST_CASE("spec validation") {
  const auto& schema = FactorSchema::builtin();
  GenSpec s;
  s.class_distribution = {0.5, 0.5, 0.5, 0, 0};
  CHECK_THROWS_AS(s.validate(schema), GenError);
  s = GenSpec{};
  s.label_noise = 1.0;
  CHECK_THROWS_AS(s.validate(schema), GenError);
  s = GenSpec{};
  s.n = 10;
  s.missing_count = 6;
  s.inconsistent_count = 4;
  CHECK_THROWS_AS(s.validate(schema), GenError);
  s = GenSpec{};
  s.n = 0;
  CHECK_THROWS_AS(s.validate(schema), GenError);
  s = GenSpec{};
  s.factors["not_a_factor"] = FactorGen{};
  CHECK_THROWS_AS(s.validate(schema), GenError);
}

TEST_CASE("spec JSON") {
  const auto spec = preset("defects_3100");
  const auto back = GenSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());
  CHECK(write_records_csv(generate(back).records) == write_records_csv(generate(spec).records));

  CHECK_THROWS_AS(GenSpec::from_json(nlohmann::json{{"bogus", 1}}), GenError);
  CHECK_THROWS_AS(GenSpec::from_json(nlohmann::json::array()), GenError);
  const auto rated = GenSpec::from_json(nlohmann::json{{"n", 200}, {"missing_rate", 0.05}});
  CHECK(rated.missing_count == 10);
  CHECK_THROWS_AS(GenSpec::from_json(nlohmann::json{{"n", 200}, {"missing_rate", 0.05}, {"missing_count", 3}}),
                  GenError);
  const auto constant = GenSpec::from_json(
      nlohmann::json{{"factors", {{"seismic_zone", {{"mode", "constant"}, {"value", "Zone 1"}}}}}});
  CHECK(constant.factors.at("seismic_zone").rank == 1);
}
