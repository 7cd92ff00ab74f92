#include "pipegrade/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pipegrade/io.hpp"
#include "pipegrade/rng.hpp"

namespace pipegrade {

using nlohmann::json;

namespace {

constexpr double kLengthMin = 50;
constexpr double kLengthMax = 500;
constexpr double kOpenBandSpan = 30;

std::string_view mode_name(FactorMode mode) {
  switch (mode) {
    case FactorMode::Uniform: return "uniform";
    case FactorMode::Weights: return "weights";
    case FactorMode::Constant: return "constant";
    case FactorMode::Label: return "label";
  }
  return "uniform";
}

FactorMode parse_mode(const std::string& text) {
  for (auto m : {FactorMode::Uniform, FactorMode::Weights, FactorMode::Constant, FactorMode::Label}) {
    if (text == mode_name(m)) return m;
  }
  throw GenError("unknown factor mode '" + text + "'");
}

// Integer range covered by a band, or the band's midpoint when it holds no integer.
std::pair<double, double> band_range(const Band& b) {
  double lo = b.lower_inclusive ? std::ceil(b.lower) : std::floor(b.lower) + 1;
  double hi;
  if (b.upper) {
    hi = b.upper_inclusive ? std::floor(*b.upper) : std::ceil(*b.upper) - 1;
  } else {
    hi = lo + kOpenBandSpan;
  }
  if (lo > hi) {
    const double mid = b.upper ? (b.lower + *b.upper) / 2 : b.lower + 1;
    return {mid, mid};
  }
  return {lo, hi};
}

bool rank_available(const FactorDef& f, int rank) {
  switch (f.kind) {
    case FactorKind::PassThrough: return is_rating(rank);
    case FactorKind::NumericBanded:
      return std::any_of(f.bands.begin(), f.bands.end(), [&](const Band& b) { return b.rank == rank; });
    case FactorKind::Categorical:
      return std::any_of(f.categories.begin(), f.categories.end(), [&](const Category& c) { return c.rank == rank; });
  }
  return false;
}

// Raw value (as CSV text) carrying `rank`; random unless `first` is set.
std::string raw_for_rank(const FactorDef& f, int rank, Rng* rng) {
  switch (f.kind) {
    case FactorKind::PassThrough: return std::to_string(rank);
    case FactorKind::NumericBanded: {
      std::vector<const Band*> pool;
      for (const auto& b : f.bands) {
        if (b.rank == rank) pool.push_back(&b);
      }
      const Band& b = *pool[rng ? rng->below(pool.size()) : 0];
      const auto [lo, hi] = band_range(b);
      if (!rng || lo == hi) return format_number(lo);
      return format_number(lo + static_cast<double>(rng->below(static_cast<std::uint64_t>(hi - lo) + 1)));
    }
    case FactorKind::Categorical: {
      std::vector<const Category*> pool;
      for (const auto& c : f.categories) {
        if (c.rank == rank) pool.push_back(&c);
      }
      return pool[rng ? rng->below(pool.size()) : 0]->value;
    }
  }
  return {};
}

void set_raw(PipeRecord& r, Field field, const std::string& raw) {
  auto number = [&] { return std::stod(raw); };
  switch (field) {
    case Field::PipeAge: r.pipe_age_years = number(); break;
    case Field::Diameter: r.diameter_inches = number(); break;
    case Field::TotalLength: r.total_length_feet = number(); break;
    case Field::LengthSurveyed: r.length_surveyed_feet = number(); break;
    case Field::StructuralScore: r.structural_score = static_cast<int>(number()); break;
    case Field::OmScore: r.om_score = static_cast<int>(number()); break;
    case Field::Material: r.material = raw; break;
    case Field::Shape: r.shape = raw; break;
    case Field::Depth: r.depth = raw; break;
    case Field::SoilType: r.soil_type = raw; break;
    case Field::Loading: r.loading = raw; break;
    case Field::WasteType: r.waste_type = raw; break;
    case Field::SeismicZone: r.seismic_zone = raw; break;
    case Field::RepairHistory: r.repair_history = raw; break;
    case Field::PipeId: r.pipe_id = raw; break;
    case Field::ComprehensiveRating: r.comprehensive_rating = static_cast<int>(number()); break;
  }
}

std::optional<int> rank_of_value(const FactorDef& f, const std::string& value) {
  switch (f.kind) {
    case FactorKind::Categorical: return rank_category(f, value);
    case FactorKind::NumericBanded:
    case FactorKind::PassThrough: {
      double v = 0;
      try {
        std::size_t used = 0;
        v = std::stod(value, &used);
        if (used != value.size()) return std::nullopt;
      } catch (const std::exception&) {
        return std::nullopt;
      }
      if (f.kind == FactorKind::NumericBanded) return rank_numeric(f, v);
      if (v != std::floor(v) || !is_rating(static_cast<int>(v))) return std::nullopt;
      return static_cast<int>(v);
    }
  }
  return std::nullopt;
}

double mode_weight(const FactorGen& g, int rank, Rating label) {
  switch (g.mode) {
    case FactorMode::Uniform: return 1.0;
    case FactorMode::Weights: return g.weights[static_cast<std::size_t>(rank - 1)];
    case FactorMode::Constant: return rank == g.rank ? 1.0 : 0.0;
    case FactorMode::Label: return rank == label ? 1.0 : 0.0;
  }
  return 0.0;
}

const FactorGen& gen_for(const GenSpec& spec, const std::string& name) {
  static const FactorGen kUniform;
  auto it = spec.factors.find(name);
  return it == spec.factors.end() ? kUniform : it->second;
}

std::vector<std::size_t> class_counts(const GenSpec& spec) {
  std::vector<std::size_t> counts(kNumRatings);
  std::vector<double> remainders(kNumRatings);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kNumRatings; ++c) {
    const double exact = spec.class_distribution[c] * static_cast<double>(spec.n);
    counts[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  std::vector<std::size_t> order(kNumRatings);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < spec.n; i = (i + 1) % kNumRatings) {
    if (spec.class_distribution[order[i]] > 0) {
      ++counts[order[i]];
      ++assigned;
    }
  }
  return counts;
}

std::optional<std::size_t> factor_with_field(const FactorSchema& schema, Field field) {
  for (std::size_t i = 0; i < schema.factors().size(); ++i) {
    if (schema.factors()[i].field == field) return i;
  }
  return std::nullopt;
}

struct HcPlan {
  std::array<std::size_t, 3> factor_index{};
  // Per rating: candidate triples and their proposal weights.
  std::array<std::vector<std::array<int, 3>>, kNumRatings> combos;
  std::array<std::vector<double>, kNumRatings> weights;
};

HcPlan plan_hc(const GenSpec& spec, const FactorSchema& schema) {
  HcPlan plan;
  const Field fields[3] = {Field::StructuralScore, Field::OmScore, Field::RepairHistory};
  for (std::size_t j = 0; j < 3; ++j) {
    auto idx = factor_with_field(schema, fields[j]);
    if (!idx) throw GenError("planted rule needs a schema factor for " + std::string(field_name(fields[j])));
    plan.factor_index[j] = *idx;
  }
  const auto& defs = schema.factors();
  for (Rating label = 1; label <= kNumRatings; ++label) {
    auto& combos = plan.combos[static_cast<std::size_t>(label - 1)];
    auto& weights = plan.weights[static_cast<std::size_t>(label - 1)];
    for (int s = 1; s <= kNumRatings; ++s) {
      for (int o = 1; o <= kNumRatings; ++o) {
        for (int r = 1; r <= kNumRatings; ++r) {
          if (hc_rule(spec.rule_weights, s, o, r) != label) continue;
          const std::array<int, 3> triple{s, o, r};
          double w = 1.0;
          for (std::size_t j = 0; j < 3; ++j) {
            const auto& def = defs[plan.factor_index[j]];
            if (!rank_available(def, triple[j])) w = 0;
            w *= mode_weight(gen_for(spec, def.name), triple[j], label);
          }
          if (w > 0) {
            combos.push_back(triple);
            weights.push_back(w);
          }
        }
      }
    }
  }
  return plan;
}

}  // namespace

Rating hc_rule(const std::array<double, 3>& weights, int structural, int om, int repair) {
  const double raw = weights[0] * structural + weights[1] * om + weights[2] * repair;
  return static_cast<Rating>(std::clamp<long>(std::lround(raw), 1, kNumRatings));
}

void GenSpec::validate(const FactorSchema& schema) const {
  if (n == 0) throw GenError("n must be positive");
  double total = 0;
  for (double p : class_distribution) {
    if (!(p >= 0) || !std::isfinite(p)) throw GenError("class distribution entries must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw GenError("class distribution must sum to 1");
  if (!(label_noise >= 0.0 && label_noise < 1.0)) throw GenError("label noise must lie in [0, 1)");
  if (rule == PlantedRule::HcWeighted) {
    double wsum = 0;
    for (double w : rule_weights) {
      if (!(w >= 0) || !std::isfinite(w)) throw GenError("rule weights must be non-negative");
      wsum += w;
    }
    if (wsum <= 0) throw GenError("rule weights must not all be zero");
  }
  if (missing_count + inconsistent_count >= n) {
    throw GenError("defect counts (" + std::to_string(missing_count + inconsistent_count) +
                   ") must leave at least one clean record out of " + std::to_string(n));
  }
  for (const auto& [name, g] : factors) {
    if (!schema.index_of(name)) throw GenError("unknown factor '" + name + "' in generator spec");
    const auto& def = schema.factor(name);
    switch (g.mode) {
      case FactorMode::Weights: {
        double wsum = 0;
        for (int r = 1; r <= kNumRatings; ++r) {
          const double w = g.weights[static_cast<std::size_t>(r - 1)];
          if (!(w >= 0) || !std::isfinite(w)) throw GenError("factor '" + name + "': weights must be non-negative");
          if (w > 0 && !rank_available(def, r)) {
            throw GenError("factor '" + name + "' has no value with rank " + std::to_string(r));
          }
          wsum += w;
        }
        if (wsum <= 0) throw GenError("factor '" + name + "': weights must not all be zero");
        break;
      }
      case FactorMode::Constant:
        if (!is_rating(g.rank) || !rank_available(def, g.rank)) {
          throw GenError("factor '" + name + "' has no value with rank " + std::to_string(g.rank));
        }
        if (g.value && rank_of_value(def, *g.value) != g.rank) {
          throw GenError("factor '" + name + "': constant value '" + *g.value + "' does not encode to rank " +
                         std::to_string(g.rank));
        }
        break;
      case FactorMode::Label:
        for (int r = 1; r <= kNumRatings; ++r) {
          if (class_distribution[static_cast<std::size_t>(r - 1)] > 0 && !rank_available(def, r)) {
            throw GenError("factor '" + name + "' has no value with rank " + std::to_string(r));
          }
        }
        break;
      case FactorMode::Uniform:
        for (int r = 1; r <= kNumRatings; ++r) {
          if (!rank_available(def, r)) {
            throw GenError("factor '" + name + "' has no value with rank " + std::to_string(r));
          }
        }
        break;
    }
  }
  if (rule == PlantedRule::HcWeighted) {
    const HcPlan plan = plan_hc(*this, schema);
    for (int c = 1; c <= kNumRatings; ++c) {
      if (class_distribution[static_cast<std::size_t>(c - 1)] > 0 && plan.combos[static_cast<std::size_t>(c - 1)].empty()) {
        throw GenError("planted rule cannot produce rating " + std::to_string(c) +
                       " with the configured hydraulic factor distributions");
      }
    }
  }
}

GenResult generate(const GenSpec& spec, const FactorSchema& schema) {
  spec.validate(schema);
  Rng rng(spec.seed);
  const auto& defs = schema.factors();

  // Exact class counts, then a shuffle to scatter them.
  std::vector<Rating> labels;
  labels.reserve(spec.n);
  const auto counts = class_counts(spec);
  for (std::size_t c = 0; c < kNumRatings; ++c) labels.insert(labels.end(), counts[c], static_cast<Rating>(c + 1));
  rng.shuffle(std::span(labels));

  std::optional<HcPlan> plan;
  if (spec.rule == PlantedRule::HcWeighted) plan = plan_hc(spec, schema);

  // Constant factors share one raw value.
  std::vector<std::optional<std::string>> constant_raw(defs.size());
  for (std::size_t f = 0; f < defs.size(); ++f) {
    const auto& g = gen_for(spec, defs[f].name);
    if (g.mode == FactorMode::Constant) constant_raw[f] = g.value ? *g.value : raw_for_rank(defs[f], g.rank, nullptr);
  }

  GenResult out;
  out.records.resize(spec.n);
  out.planted = labels;
  const int id_width = static_cast<int>(std::to_string(spec.n).size());
  for (std::size_t i = 0; i < spec.n; ++i) {
    PipeRecord& rec = out.records[i];
    const Rating label = labels[i];
    const std::string digits = std::to_string(i + 1);
    rec.pipe_id = "P" + std::string(static_cast<std::size_t>(std::max(id_width, 5)) - std::min<std::size_t>(digits.size(), static_cast<std::size_t>(std::max(id_width, 5))), '0') + digits;
    rec.comprehensive_rating = label;

    std::vector<int> ranks(defs.size(), 0);
    if (plan) {
      const auto li = static_cast<std::size_t>(label - 1);
      const auto& triple = plan->combos[li][rng.weighted(plan->weights[li])];
      for (std::size_t j = 0; j < 3; ++j) ranks[plan->factor_index[j]] = triple[j];
    }
    for (std::size_t f = 0; f < defs.size(); ++f) {
      const auto& def = defs[f];
      if (constant_raw[f]) {
        set_raw(rec, def.field, *constant_raw[f]);
        continue;
      }
      if (ranks[f] == 0) {
        std::array<double, kNumRatings> w{};
        for (int r = 1; r <= kNumRatings; ++r) {
          w[static_cast<std::size_t>(r - 1)] = mode_weight(gen_for(spec, def.name), r, label);
        }
        ranks[f] = static_cast<int>(rng.weighted(w)) + 1;
      }
      set_raw(rec, def.field, raw_for_rank(def, ranks[f], &rng));
    }
    const double total = kLengthMin + static_cast<double>(rng.below(static_cast<std::uint64_t>(kLengthMax - kLengthMin) + 1));
    const double half = std::ceil(total / 2);
    rec.total_length_feet = total;
    rec.length_surveyed_feet = half + static_cast<double>(rng.below(static_cast<std::uint64_t>(total - half) + 1));
  }

  // Label noise: an exact number of records move to a different rating.
  const auto noisy = static_cast<std::size_t>(std::llround(spec.label_noise * static_cast<double>(spec.n)));
  if (noisy > 0) {
    std::vector<std::size_t> order(spec.n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    order.resize(noisy);
    std::sort(order.begin(), order.end());
    for (auto i : order) {
      Rating& r = out.records[i].comprehensive_rating;
      const auto step = static_cast<Rating>(rng.below(kNumRatings - 1)) + 1;
      r = (r - 1 + step) % kNumRatings + 1;
      out.noisy_ids.push_back(out.records[i].pipe_id);
    }
  }

  // Defects on disjoint records.
  if (spec.missing_count + spec.inconsistent_count > 0) {
    std::vector<std::size_t> order(spec.n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    std::vector<std::size_t> missing(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.missing_count));
    std::vector<std::size_t> bad(order.begin() + static_cast<std::ptrdiff_t>(spec.missing_count),
                                 order.begin() + static_cast<std::ptrdiff_t>(spec.missing_count + spec.inconsistent_count));
    std::sort(missing.begin(), missing.end());
    std::sort(bad.begin(), bad.end());
    for (auto i : missing) {
      clear_field(out.records[i], defs[rng.below(defs.size())].field);
      out.missing_ids.push_back(out.records[i].pipe_id);
    }
    for (std::size_t j = 0; j < bad.size(); ++j) {
      PipeRecord& rec = out.records[bad[j]];
      switch (j % 4) {
        case 0: rec.length_surveyed_feet = *rec.total_length_feet + 10; break;
        case 1: rec.pipe_age_years = -1.0 - static_cast<double>(rng.below(20)); break;
        case 2:
          rec.total_length_feet = 0;
          rec.length_surveyed_feet = 0;
          break;
        default: rec.depth = "Unknown depth"; break;
      }
      out.inconsistent_ids.push_back(rec.pipe_id);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spec files

GenSpec GenSpec::from_json(const json& doc) {
  static const std::vector<std::string> kKeys = {
      "n", "seed", "class_distribution", "rule", "rule_weights", "label_noise", "factors",
      "missing_count", "inconsistent_count", "missing_rate", "inconsistent_rate", "description"};
  try {
    if (!doc.is_object()) throw GenError("generator spec must be a JSON object");
    for (const auto& [key, _] : doc.items()) {
      if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
        throw GenError("unknown key '" + key + "' in generator spec");
      }
    }
    GenSpec s;
    s.n = doc.value("n", s.n);
    s.seed = doc.value("seed", s.seed);
    if (doc.contains("class_distribution")) {
      s.class_distribution = doc["class_distribution"].get<std::array<double, kNumRatings>>();
    }
    const std::string rule = doc.value("rule", std::string("hc_weighted"));
    if (rule == "hc_weighted") {
      s.rule = PlantedRule::HcWeighted;
    } else if (rule == "none") {
      s.rule = PlantedRule::None;
    } else {
      throw GenError("unknown planted rule '" + rule + "'");
    }
    if (doc.contains("rule_weights")) s.rule_weights = doc["rule_weights"].get<std::array<double, 3>>();
    s.label_noise = doc.value("label_noise", 0.0);
    auto count_or_rate = [&](const char* count_key, const char* rate_key) -> std::size_t {
      if (doc.contains(count_key) && doc.contains(rate_key)) {
        throw GenError(std::string("give either ") + count_key + " or " + rate_key + ", not both");
      }
      if (doc.contains(rate_key)) {
        const double rate = doc[rate_key].get<double>();
        if (!(rate >= 0 && rate < 1)) throw GenError(std::string(rate_key) + " must lie in [0, 1)");
        return static_cast<std::size_t>(std::llround(rate * static_cast<double>(s.n)));
      }
      return doc.value(count_key, std::size_t{0});
    };
    s.missing_count = count_or_rate("missing_count", "missing_rate");
    s.inconsistent_count = count_or_rate("inconsistent_count", "inconsistent_rate");
    if (doc.contains("factors")) {
      for (const auto& [name, j] : doc["factors"].items()) {
        FactorGen g;
        g.mode = parse_mode(j.value("mode", std::string("uniform")));
        if (j.contains("weights")) g.weights = j["weights"].get<std::array<double, kNumRatings>>();
        if (j.contains("value")) g.value = j["value"].is_string() ? j["value"].get<std::string>()
                                                                   : format_number(j["value"].get<double>());
        if (j.contains("rank")) {
          g.rank = j["rank"].get<int>();
        } else if (g.mode == FactorMode::Constant) {
          if (!g.value) throw GenError("factor '" + name + "': constant mode needs a rank or a value");
          auto r = rank_of_value(FactorSchema::builtin().factor(name), *g.value);
          if (!r) throw GenError("factor '" + name + "': constant value '" + *g.value + "' has no rank");
          g.rank = *r;
        }
        s.factors[name] = g;
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw GenError(std::string("malformed generator spec: ") + e.what());
  } catch (const SchemaError& e) {
    throw GenError(e.what());
  }
}

GenSpec GenSpec::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw GenError(path.string() + ": " + e.what());
  }
}

json GenSpec::to_json() const {
  json doc{{"n", n},
           {"seed", seed},
           {"class_distribution", class_distribution},
           {"rule", rule == PlantedRule::HcWeighted ? "hc_weighted" : "none"},
           {"rule_weights", rule_weights},
           {"label_noise", label_noise},
           {"missing_count", missing_count},
           {"inconsistent_count", inconsistent_count}};
  json fj = json::object();
  for (const auto& [name, g] : factors) {
    json j{{"mode", mode_name(g.mode)}};
    if (g.mode == FactorMode::Weights) j["weights"] = g.weights;
    if (g.mode == FactorMode::Constant) j["rank"] = g.rank;
    if (g.value) j["value"] = *g.value;
    fj[name] = std::move(j);
  }
  doc["factors"] = std::move(fj);
  return doc;
}

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> preset_names() { return {"field_mix", "separable", "noisy_separable", "defects_3100"}; }

GenSpec preset(std::string_view name) {
  GenSpec s;
  s.n = 1240;
  s.class_distribution = {0.081, 0.21, 0.297, 0.255, 0.157};
  s.rule = PlantedRule::HcWeighted;

  FactorGen diameter;
  diameter.mode = FactorMode::Constant;
  diameter.rank = 5;
  diameter.value = "8";
  FactorGen seismic;
  seismic.mode = FactorMode::Constant;
  seismic.rank = 1;
  seismic.value = "Zone 1";

  auto weights = [](std::array<double, kNumRatings> w) {
    FactorGen g;
    g.mode = FactorMode::Weights;
    g.weights = w;
    return g;
  };
  auto field_mix_factors = [&] {
    s.factors = {{"age", weights({0.05, 0.15, 0.30, 0.25, 0.25})},
                 {"material", weights({0.30, 0.20, 0.40, 0.05, 0.05})},
                 {"diameter", diameter},
                 {"shape", weights({0.85, 0.05, 0.04, 0.03, 0.03})},
                 {"depth", weights({0.40, 0.30, 0.15, 0.10, 0.05})},
                 {"soil_type", weights({0.10, 0.25, 0.35, 0.20, 0.10})},
                 {"loading", weights({0.15, 0.30, 0.30, 0.15, 0.10})},
                 {"waste_type", weights({0.10, 0.20, 0.40, 0.20, 0.10})},
                 {"seismic_zone", seismic}};
  };

  if (name == "field_mix") {
    s.seed = 2023;
    s.label_noise = 0.2;
    field_mix_factors();
  } else if (name == "separable" || name == "noisy_separable") {
    s.seed = 11;
    s.label_noise = name == "separable" ? 0.0 : 0.1;
    FactorGen label;
    label.mode = FactorMode::Label;
    for (const auto& def : FactorSchema::builtin().factors()) s.factors[def.name] = label;
    s.factors["diameter"] = diameter;
    s.factors["seismic_zone"] = seismic;
  } else if (name == "defects_3100") {
    s.n = 3100;
    s.seed = 3100;
    s.label_noise = 0.2;
    s.missing_count = 60;
    s.inconsistent_count = 70;
    field_mix_factors();
  } else {
    throw GenError("unknown preset '" + std::string(name) + "'");
  }
  return s;
}

}  // namespace pipegrade
