#include "pipegrade/knn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "pipegrade/io.hpp"
#include "pipegrade/rng.hpp"

namespace pipegrade {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Split

Split split(std::span<const FeatureVector> vectors, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ModelError("train_fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = vectors.size();
  if (n < 4) throw ModelError("too few vectors to split (need at least 4, have " + std::to_string(n) + ")");

  std::size_t n_train = static_cast<std::size_t>(std::ceil(spec.train_fraction * static_cast<double>(n) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  Rng rng(spec.seed);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> valid_idx;

  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    valid_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  } else {
    std::map<Rating, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[vectors[i].label].push_back(i);

    struct Quota {
      Rating label;
      std::size_t take;
      double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (auto& [label, members] : groups) {
      rng.shuffle(std::span(members));
      const double exact = spec.train_fraction * static_cast<double>(members.size());
      const auto take = static_cast<std::size_t>(std::floor(exact + 1e-9));
      quotas.push_back({label, take, exact - static_cast<double>(take)});
      assigned += take;
    }
    std::vector<std::size_t> by_remainder(quotas.size());
    std::iota(by_remainder.begin(), by_remainder.end(), 0);
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
    for (std::size_t i = 0; assigned < n_train; i = (i + 1) % by_remainder.size()) {
      Quota& q = quotas[by_remainder[i]];
      if (q.take < groups[q.label].size()) {
        ++q.take;
        ++assigned;
      }
    }
    for (const auto& q : quotas) {
      const auto& members = groups[q.label];
      train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q.take));
      valid_idx.insert(valid_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(q.take), members.end());
    }
    rng.shuffle(std::span(train_idx));
    rng.shuffle(std::span(valid_idx));
  }

  Split out;
  out.train.reserve(train_idx.size());
  out.validation.reserve(valid_idx.size());
  for (auto i : train_idx) out.train.push_back(vectors[i]);
  for (auto i : valid_idx) out.validation.push_back(vectors[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Distance

double distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ModelError("dimension mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  double sum = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - y[j];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double distance(std::span<const int> x, std::span<const int> y) {
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> b(y.begin(), y.end());
  return distance(std::span<const double>(a), std::span<const double>(b));
}

std::string_view to_string(TieBreak tie_break) {
  return tie_break == TieBreak::NearestMember ? "nearest_member" : "smallest_rating";
}

TieBreak parse_tie_break(std::string_view text) {
  if (text == "nearest_member") return TieBreak::NearestMember;
  if (text == "smallest_rating") return TieBreak::SmallestRating;
  throw ModelError("unknown tie-break policy '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Model

KnnModel::KnnModel(std::vector<FeatureVector> training, int k, TieBreak tie_break)
    : training_(std::move(training)), k_(k), tie_break_(tie_break), dims_(0) {
  if (training_.empty()) throw ModelError("KNN model needs at least one training vector");
  if (k_ < 1) throw ModelError("k must be at least 1");
  if (static_cast<std::size_t>(k_) > training_.size()) {
    throw ModelError("k exceeds training size (" + std::to_string(k_) + " > " +
                     std::to_string(training_.size()) + ")");
  }
  dims_ = training_.front().ranks.size();
  points_.reserve(training_.size() * dims_);
  for (const auto& v : training_) {
    if (v.ranks.size() != dims_) throw ModelError("training vectors have inconsistent dimensions");
    points_.insert(points_.end(), v.ranks.begin(), v.ranks.end());
  }
}

KnnModel KnnModel::with_k(int k) const { return KnnModel(training_, k, tie_break_); }

std::vector<KnnModel::Neighbor> KnnModel::nearest(std::span<const double> query, std::size_t count,
                                                  const std::string* exclude_id) const {
  if (query.size() != dims_) {
    throw ModelError("dimension mismatch: query has " + std::to_string(query.size()) + ", model has " +
                     std::to_string(dims_));
  }
  std::vector<Neighbor> all;
  all.reserve(training_.size());
  for (std::size_t i = 0; i < training_.size(); ++i) {
    if (exclude_id && training_[i].pipe_id == *exclude_id) continue;
    const double* p = points_.data() + i * dims_;
    double d2 = 0;
    for (std::size_t j = 0; j < dims_; ++j) {
      const double d = query[j] - p[j];
      d2 += d * d;
    }
    all.push_back({i, d2});
  }
  if (count > all.size()) {
    throw ModelError("k exceeds available neighbors after exclusion (" + std::to_string(count) + " > " +
                     std::to_string(all.size()) + ")");
  }
  auto closer = [](const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count), all.end(), closer);
  all.resize(count);
  return all;
}

Rating KnnModel::vote(std::span<const Neighbor> ordered, int k) const {
  struct Tally {
    Rating label;
    int votes;
    double nearest;
  };
  std::vector<Tally> tallies;
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const Rating label = training_[ordered[i].index].label;
    auto it = std::find_if(tallies.begin(), tallies.end(), [&](const Tally& t) { return t.label == label; });
    if (it == tallies.end()) {
      // Neighbours arrive nearest first, so the first sighting is the nearest member.
      tallies.push_back({label, 1, ordered[i].squared_distance});
    } else {
      ++it->votes;
    }
  }
  auto better = [&](const Tally& a, const Tally& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (tie_break_ == TieBreak::NearestMember && a.nearest != b.nearest) return a.nearest < b.nearest;
    return a.label < b.label;
  };
  return std::min_element(tallies.begin(), tallies.end(), better)->label;
}

Rating KnnModel::predict(std::span<const double> query) const {
  const auto ordered = nearest(query, static_cast<std::size_t>(k_));
  return vote(ordered, k_);
}

Rating KnnModel::predict(const FeatureVector& query, bool exclude_self) const {
  std::vector<double> q(query.ranks.begin(), query.ranks.end());
  const auto ordered = nearest(q, static_cast<std::size_t>(k_), exclude_self ? &query.pipe_id : nullptr);
  return vote(ordered, k_);
}

json KnnModel::to_json() const {
  json doc{{"kind", "knn"}, {"k", k_}, {"tie_break", to_string(tie_break_)}, {"dims", dims_}};
  doc["training"] = json::array();
  for (const auto& v : training_) {
    doc["training"].push_back({{"pipe_id", v.pipe_id}, {"ranks", v.ranks}, {"label", v.label}});
  }
  return doc;
}

KnnModel KnnModel::from_json(const json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "knn") throw ModelError("model document is not a KNN model");
    std::vector<FeatureVector> training;
    for (const auto& j : doc.at("training")) {
      training.push_back({j.at("pipe_id").get<std::string>(), j.at("ranks").get<std::vector<int>>(),
                          j.at("label").get<int>()});
    }
    return KnnModel(std::move(training), doc.at("k").get<int>(),
                    parse_tie_break(doc.value("tie_break", std::string("nearest_member"))));
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed KNN model document: ") + e.what());
  }
}

std::vector<Rating> predict_all(const KnnModel& model, std::span<const FeatureVector> eval_set, bool exclude_self) {
  std::vector<Rating> out;
  out.reserve(eval_set.size());
  for (const auto& v : eval_set) out.push_back(model.predict(v, exclude_self));
  return out;
}

double misclassification(const KnnModel& model, std::span<const FeatureVector> eval_set, bool exclude_self) {
  if (eval_set.empty()) throw ModelError("empty evaluation set");
  const auto predictions = predict_all(model, eval_set, exclude_self);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < eval_set.size(); ++i) wrong += predictions[i] != eval_set[i].label;
  return static_cast<double>(wrong) / static_cast<double>(eval_set.size());
}

// ---------------------------------------------------------------------------
// Sweep

SweepResult sweep_k(std::span<const FeatureVector> train, std::span<const FeatureVector> validation, int k_max,
                    TieBreak tie_break, int k_min) {
  if (k_min < 1 || k_max < k_min) throw ModelError("invalid k range " + std::to_string(k_min) + ".." + std::to_string(k_max));
  if (static_cast<std::size_t>(k_max) > train.size()) {
    throw ModelError("k exceeds training size (" + std::to_string(k_max) + " > " + std::to_string(train.size()) +
                     ")");
  }
  if (validation.empty()) throw ModelError("empty evaluation set");

  const KnnModel model(std::vector<FeatureVector>(train.begin(), train.end()), 1, tie_break);
  const auto depth = static_cast<std::size_t>(k_max);
  std::vector<std::size_t> train_wrong(depth + 1, 0);
  std::vector<std::size_t> valid_wrong(depth + 1, 0);

  // One neighbour ordering per query serves every K.
  // Leave-one-out leaves n - 1 candidates, so K = n has no training rate.
  const int loo_max = std::min(k_max, static_cast<int>(train.size()) - 1);
  auto tally = [&](const FeatureVector& q, bool exclude_self, std::vector<std::size_t>& wrong) {
    std::vector<double> query(q.ranks.begin(), q.ranks.end());
    const int top = exclude_self ? loo_max : k_max;
    if (top < k_min) return;
    const auto ordered =
        model.nearest(query, static_cast<std::size_t>(top), exclude_self ? &q.pipe_id : nullptr);
    for (int k = k_min; k <= top; ++k) {
      wrong[static_cast<std::size_t>(k)] += model.vote(ordered, k) != q.label;
    }
  };
  for (const auto& q : train) tally(q, true, train_wrong);
  for (const auto& q : validation) tally(q, false, valid_wrong);

  SweepResult result;
  double best = 2.0;
  for (int k = k_min; k <= k_max; ++k) {
    SweepRow row;
    row.k = k;
    row.train_count = train.size();
    row.validation_count = validation.size();
    row.train_misclassification =
        k > loo_max ? std::numeric_limits<double>::quiet_NaN()
                    : static_cast<double>(train_wrong[static_cast<std::size_t>(k)]) / static_cast<double>(train.size());
    row.validation_misclassification =
        static_cast<double>(valid_wrong[static_cast<std::size_t>(k)]) / static_cast<double>(validation.size());
    if (row.validation_misclassification < best) {
      best = row.validation_misclassification;
      result.best_k = k;
    }
    result.rows.push_back(row);
  }
  return result;
}

json to_json(const SweepResult& sweep) {
  json doc{{"best_k", sweep.best_k}};
  doc["rows"] = json::array();
  for (const auto& r : sweep.rows) {
    doc["rows"].push_back({{"k", r.k},
                           {"train_count", r.train_count},
                           {"train_misclassification", r.train_misclassification},
                           {"validation_count", r.validation_count},
                           {"validation_misclassification", r.validation_misclassification}});
  }
  return doc;
}

std::string write_sweep_csv(const SweepResult& sweep) {
  std::string out = csv_row(
      {"k", "train_count", "train_misclassification", "validation_count", "validation_misclassification"});
  for (const auto& r : sweep.rows) {
    out += csv_row({std::to_string(r.k), std::to_string(r.train_count), format_number(r.train_misclassification),
                    std::to_string(r.validation_count), format_number(r.validation_misclassification)});
  }
  return out;
}

std::string render_text(const SweepResult& sweep) {
  std::ostringstream out;
  out << "Misclassification rate for each K\n";
  out << "  training rates are leave-one-out (a point is never its own neighbour)\n";
  out << "  the validation rate at the chosen K equals 1 - overall accuracy of that K's validation confusion matrix;\n"
      << "  a sweep table and an accuracy table from the same split that break this identity are inconsistent\n";
  char line[128];
  std::snprintf(line, sizeof line, "  %4s  %10s %14s  %10s %14s\n", "K", "Train n", "Train rate", "Valid n",
                "Valid rate");
  out << line;
  for (const auto& r : sweep.rows) {
    std::snprintf(line, sizeof line, "  %4d  %10zu %14.5f  %10zu %14.5f%s\n", r.k, r.train_count,
                  r.train_misclassification, r.validation_count, r.validation_misclassification,
                  r.k == sweep.best_k ? "  <- lowest validation rate" : "");
    out << line;
  }
  return out.str();
}

}  // namespace pipegrade
