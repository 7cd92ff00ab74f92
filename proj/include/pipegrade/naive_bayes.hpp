#pragma once

#include <array>
#include <span>
#include <vector>

#include <json.hpp>

#include "pipegrade/encoding.hpp"
#include "pipegrade/knn.hpp"

namespace pipegrade {

/// Categorical naive Bayes over 1-5 ranks.
///
/// Priors are maximum-likelihood class frequencies: a rating absent from the
/// training data has prior 0 and is never predicted. Each conditional
/// P(rank = v | class c) is (count + s) / (n_c + 5 s) with smoothing s, so a
/// class with no training rows has uniform conditionals.
class NbModel {
 public:
  static NbModel fit(std::span<const FeatureVector> train, double smoothing = 1.0);

  double smoothing() const { return smoothing_; }
  std::size_t dims() const { return dims_; }
  double prior(Rating c) const { return priors_.at(static_cast<std::size_t>(c - 1)); }
  double conditional(std::size_t factor, int rank, Rating c) const;
  std::size_t class_count(Rating c) const { return class_counts_.at(static_cast<std::size_t>(c - 1)); }

  /// log P(c) + sum_f log P(x_f | c) per rating; -inf for ratings with prior 0.
  std::array<double, kNumRatings> log_scores(std::span<const int> query) const;
  /// Normalized posteriors P(c | x).
  std::array<double, kNumRatings> posteriors(std::span<const int> query) const;
  /// Argmax of the log scores; ties go to the smaller rating.
  Rating predict(std::span<const int> query) const;

  nlohmann::json to_json() const;
  static NbModel from_json(const nlohmann::json& doc);

 private:
  NbModel() = default;
  std::size_t index(std::size_t factor, int rank, Rating c) const;

  double smoothing_ = 1.0;
  std::size_t dims_ = 0;
  std::array<std::size_t, kNumRatings> class_counts_{};
  std::array<double, kNumRatings> priors_{};
  // Indexed [factor][class][rank].
  std::vector<double> conditionals_;
};

std::vector<Rating> predict_all(const NbModel& model, std::span<const FeatureVector> eval_set);

}  // namespace pipegrade
