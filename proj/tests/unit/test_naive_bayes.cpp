#include <doctest.h>

#include <cmath>
#include <limits>

#include "pipegrade/naive_bayes.hpp"
#include "pipegrade/rng.hpp"

using namespace pipegrade;

namespace {

std::vector<FeatureVector> random_vectors(std::size_t n, std::size_t dims, std::uint64_t seed, int classes = 5) {
  Rng rng(seed);
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> r(dims);
    for (auto& v : r) v = 1 + static_cast<int>(rng.below(5));
    out.push_back({"v" + std::to_string(i), r, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)))});
  }
  return out;
}

// Log score computed directly from tallies.
double oracle_log_score(const std::vector<FeatureVector>& train, const std::vector<int>& q, Rating c, double s) {
  double n_c = 0;
  for (const auto& v : train) n_c += v.label == c;
  if (n_c == 0) return -std::numeric_limits<double>::infinity();
  double score = std::log(n_c / static_cast<double>(train.size()));
  for (std::size_t f = 0; f < q.size(); ++f) {
    double count = 0;
    for (const auto& v : train) count += v.label == c && v.ranks[f] == q[f];
    score += std::log((count + s) / (n_c + 5 * s));
  }
  return score;
}

}  // namespace

TEST_CASE("single-class training always predicts that class") {
  std::vector<FeatureVector> train;
  for (int i = 0; i < 10; ++i) train.push_back({"t" + std::to_string(i), {1 + i % 5, 3}, 4});
  const auto m = NbModel::fit(train);
  CHECK(m.prior(4) == 1.0);
  CHECK(m.prior(1) == 0.0);
  for (int a = 1; a <= 5; ++a) {
    const std::vector<int> q{a, 6 - a};
    CHECK(m.predict(q) == 4);
    CHECK(std::isinf(m.log_scores(q)[0]));
  }
}

TEST_CASE("balanced two-class priors") {
  std::vector<FeatureVector> train;
  for (int i = 0; i < 8; ++i) train.push_back({"t" + std::to_string(i), {1 + i % 2}, i < 4 ? 2 : 5});
  const auto m = NbModel::fit(train);
  CHECK(m.prior(2) == 0.5);
  CHECK(m.prior(5) == 0.5);
  CHECK(m.class_count(2) == 4);
  // Each class saw ranks 1 and 2 twice: (2 + 1) / (4 + 5)
  CHECK(m.conditional(0, 1, 2) == doctest::Approx(3.0 / 9.0).epsilon(1e-15));
  CHECK(m.conditional(0, 3, 5) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  // Symmetric evidence: the smaller rating wins the tie.
  const std::vector<int> q{1};
  CHECK(m.predict(q) == 2);
}

TEST_CASE("log scores match tallies computed from scratch") {
  for (std::size_t n : {40u, 60u}) {
    const auto train = random_vectors(n, 6, n);
    const auto queries = random_vectors(30, 6, n + 1);
    for (double s : {1.0, 0.5}) {
      const auto m = NbModel::fit(train, s);
      for (const auto& q : queries) {
        const auto scores = m.log_scores(q.ranks);
        Rating best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (Rating c = 1; c <= 5; ++c) {
          const double expected = oracle_log_score(train, q.ranks, c, s);
          if (std::isinf(expected)) {
            CHECK(std::isinf(scores[static_cast<std::size_t>(c - 1)]));
          } else {
            CHECK(std::abs(scores[static_cast<std::size_t>(c - 1)] - expected) < 1e-9);
          }
          if (expected > best_score) {
            best_score = expected;
            best = c;
          }
        }
        CHECK(m.predict(q.ranks) == best);
      }
    }
  }
}

TEST_CASE("distributions sum to one") {
  const auto train = random_vectors(90, 4, 8, 3);
  const auto m = NbModel::fit(train, 0.7);
  double prior_sum = 0;
  for (Rating c = 1; c <= 5; ++c) prior_sum += m.prior(c);
  CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.prior(4) == 0.0);
  for (std::size_t f = 0; f < 4; ++f) {
    for (Rating c = 1; c <= 3; ++c) {
      double sum = 0;
      for (int r = 1; r <= 5; ++r) sum += m.conditional(f, r, c);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  const std::vector<int> q{1, 2, 3, 4};
  const auto post = m.posteriors(q);
  double total = 0;
  for (double p : post) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(post[3] == 0.0);
}

TEST_CASE("separable data is learned exactly") {
  std::vector<FeatureVector> train;
  for (int c = 1; c <= 5; ++c)
    for (int i = 0; i < 6; ++i) train.push_back({"t" + std::to_string(c * 10 + i), {c, c, 6 - c}, c});
  const auto m = NbModel::fit(train);
  for (int c = 1; c <= 5; ++c) {
    const std::vector<int> q{c, c, 6 - c};
    CHECK(m.predict(q) == c);
  }
  CHECK(predict_all(m, train).size() == 30);
}

TEST_CASE("prediction is unchanged by training order") {
  auto train = random_vectors(70, 5, 31);
  const auto a = NbModel::fit(train);
  Rng rng(2);
  rng.shuffle(std::span(train));
  const auto b = NbModel::fit(train);
  for (const auto& q : random_vectors(40, 5, 32)) CHECK(a.predict(q.ranks) == b.predict(q.ranks));
}

TEST_CASE("vanishing smoothing approaches relative frequencies") {
  const auto train = random_vectors(50, 3, 77);
  const auto m = NbModel::fit(train, 1e-9);
  for (Rating c = 1; c <= 5; ++c) {
    const double n_c = static_cast<double>(m.class_count(c));
    if (n_c == 0) continue;
    for (int r = 1; r <= 5; ++r) {
      double count = 0;
      for (const auto& v : train) count += v.label == c && v.ranks[1] == r;
      CHECK(std::abs(m.conditional(1, r, c) - count / n_c) < 1e-7);
    }
  }
}

TEST_CASE("JSON round-trip") {
  const auto train = random_vectors(45, 4, 3);
  const auto m = NbModel::fit(train, 0.25);
  const auto back = NbModel::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  for (const auto& q : random_vectors(20, 4, 4)) CHECK(back.log_scores(q.ranks) == m.log_scores(q.ranks));
  auto doc = m.to_json();
  doc["kind"] = "knn";
  CHECK_THROWS_AS(NbModel::from_json(doc), ModelError);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(NbModel::fit({}), ModelError);
  const auto train = random_vectors(10, 2, 1);
  CHECK_THROWS_WITH_AS(NbModel::fit(train, 0.0), "smoothing must be positive", ModelError);
  CHECK_THROWS_AS(NbModel::fit(train, -1.0), ModelError);
  const auto m = NbModel::fit(train);
  const std::vector<int> wrong_dims{1, 2, 3};
  CHECK_THROWS_AS(m.predict(wrong_dims), ModelError);
  const std::vector<int> bad_rank{1, 6};
  CHECK_THROWS_AS(m.predict(bad_rank), ModelError);
  std::vector<FeatureVector> mixed{{"a", {1, 2}, 1}, {"b", {1}, 2}};
  CHECK_THROWS_AS(NbModel::fit(mixed), ModelError);
}
