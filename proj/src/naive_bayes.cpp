#include "pipegrade/naive_bayes.hpp"

#include <cmath>
#include <limits>

namespace pipegrade {

using nlohmann::json;

namespace {

void check_query(std::span<const int> query, std::size_t dims) {
  if (query.size() != dims) {
    throw ModelError("dimension mismatch: query has " + std::to_string(query.size()) + ", model has " +
                     std::to_string(dims));
  }
  for (int v : query) {
    if (!is_rating(v)) throw ModelError("rank " + std::to_string(v) + " out of range 1–5");
  }
}

}  // namespace

std::size_t NbModel::index(std::size_t factor, int rank, Rating c) const {
  return (factor * kNumRatings + static_cast<std::size_t>(c - 1)) * kNumRatings + static_cast<std::size_t>(rank - 1);
}

NbModel NbModel::fit(std::span<const FeatureVector> train, double smoothing) {
  if (!(smoothing > 0.0) || !std::isfinite(smoothing)) throw ModelError("smoothing must be positive");
  if (train.empty()) throw ModelError("naive Bayes needs at least one training vector");

  NbModel m;
  m.smoothing_ = smoothing;
  m.dims_ = train.front().ranks.size();
  std::vector<std::size_t> counts(m.dims_ * kNumRatings * kNumRatings, 0);
  for (const auto& v : train) {
    if (v.ranks.size() != m.dims_) throw ModelError("training vectors have inconsistent dimensions");
    if (!is_rating(v.label)) throw ModelError("label " + std::to_string(v.label) + " out of range 1–5");
    check_query(v.ranks, m.dims_);
    ++m.class_counts_[static_cast<std::size_t>(v.label - 1)];
    for (std::size_t f = 0; f < m.dims_; ++f) ++counts[m.index(f, v.ranks[f], v.label)];
  }

  const auto n = static_cast<double>(train.size());
  for (int c = 1; c <= kNumRatings; ++c) {
    m.priors_[static_cast<std::size_t>(c - 1)] = static_cast<double>(m.class_counts_[static_cast<std::size_t>(c - 1)]) / n;
  }
  m.conditionals_.resize(counts.size());
  for (std::size_t f = 0; f < m.dims_; ++f) {
    for (int c = 1; c <= kNumRatings; ++c) {
      const double denom =
          static_cast<double>(m.class_counts_[static_cast<std::size_t>(c - 1)]) + kNumRatings * smoothing;
      for (int r = 1; r <= kNumRatings; ++r) {
        const std::size_t i = m.index(f, r, c);
        m.conditionals_[i] = (static_cast<double>(counts[i]) + smoothing) / denom;
      }
    }
  }
  return m;
}

double NbModel::conditional(std::size_t factor, int rank, Rating c) const {
  if (factor >= dims_ || !is_rating(rank) || !is_rating(c)) throw ModelError("conditional index out of range");
  return conditionals_[index(factor, rank, c)];
}

std::array<double, kNumRatings> NbModel::log_scores(std::span<const int> query) const {
  check_query(query, dims_);
  std::array<double, kNumRatings> out;
  for (int c = 1; c <= kNumRatings; ++c) {
    const double prior = priors_[static_cast<std::size_t>(c - 1)];
    if (prior == 0.0) {
      out[static_cast<std::size_t>(c - 1)] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double s = std::log(prior);
    for (std::size_t f = 0; f < dims_; ++f) s += std::log(conditionals_[index(f, query[f], c)]);
    out[static_cast<std::size_t>(c - 1)] = s;
  }
  return out;
}

std::array<double, kNumRatings> NbModel::posteriors(std::span<const int> query) const {
  auto s = log_scores(query);
  double top = -std::numeric_limits<double>::infinity();
  for (double v : s) top = std::max(top, v);
  double total = 0;
  for (double& v : s) {
    v = std::isinf(v) ? 0.0 : std::exp(v - top);
    total += v;
  }
  for (double& v : s) v /= total;
  return s;
}

Rating NbModel::predict(std::span<const int> query) const {
  const auto s = log_scores(query);
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.size(); ++c) {
    if (s[c] > s[best]) best = c;
  }
  return static_cast<Rating>(best + 1);
}

json NbModel::to_json() const {
  json doc{{"kind", "naive_bayes"}, {"smoothing", smoothing_}, {"dims", dims_}};
  doc["class_counts"] = class_counts_;
  doc["priors"] = priors_;
  json cond = json::array();
  for (std::size_t f = 0; f < dims_; ++f) {
    json per_class = json::array();
    for (int c = 1; c <= kNumRatings; ++c) {
      json row = json::array();
      for (int r = 1; r <= kNumRatings; ++r) row.push_back(conditionals_[index(f, r, c)]);
      per_class.push_back(std::move(row));
    }
    cond.push_back(std::move(per_class));
  }
  doc["conditionals"] = std::move(cond);
  return doc;
}

NbModel NbModel::from_json(const json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "naive_bayes") {
      throw ModelError("model document is not a naive Bayes model");
    }
    NbModel m;
    m.smoothing_ = doc.at("smoothing").get<double>();
    m.dims_ = doc.at("dims").get<std::size_t>();
    m.class_counts_ = doc.at("class_counts").get<std::array<std::size_t, kNumRatings>>();
    m.priors_ = doc.at("priors").get<std::array<double, kNumRatings>>();
    const auto& cond = doc.at("conditionals");
    if (cond.size() != m.dims_) throw ModelError("conditional table does not match dims");
    m.conditionals_.resize(m.dims_ * kNumRatings * kNumRatings);
    for (std::size_t f = 0; f < m.dims_; ++f) {
      for (int c = 1; c <= kNumRatings; ++c) {
        for (int r = 1; r <= kNumRatings; ++r) {
          m.conditionals_[m.index(f, r, c)] =
              cond.at(f).at(static_cast<std::size_t>(c - 1)).at(static_cast<std::size_t>(r - 1)).get<double>();
        }
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed naive Bayes model document: ") + e.what());
  }
}

std::vector<Rating> predict_all(const NbModel& model, std::span<const FeatureVector> eval_set) {
  std::vector<Rating> out;
  out.reserve(eval_set.size());
  for (const auto& v : eval_set) out.push_back(model.predict(v.ranks));
  return out;
}

}  // namespace pipegrade
