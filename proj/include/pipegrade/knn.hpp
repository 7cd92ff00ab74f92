#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipegrade/encoding.hpp"

namespace pipegrade {

class ModelError : public Error {
 public:
  using Error::Error;
};

struct SplitSpec {
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
  /// Allocate the training share per rating so class proportions carry over.
  bool stratified = false;
};

struct Split {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> validation;
};

/// Seeded shuffle then cut: ceil(train_fraction * n) training vectors, the rest
/// for validation. Needs at least 4 vectors.
Split split(std::span<const FeatureVector> vectors, const SplitSpec& spec);

/// Euclidean distance in d dimensions.
double distance(std::span<const double> x, std::span<const double> y);
double distance(std::span<const int> x, std::span<const int> y);

/// How to settle a tie between ratings that received the same number of votes.
enum class TieBreak {
  /// The tied rating whose nearest voter is closest wins; equal distances fall
  /// back to the smaller rating.
  NearestMember,
  /// The smaller tied rating wins.
  SmallestRating,
};

std::string_view to_string(TieBreak tie_break);
TieBreak parse_tie_break(std::string_view text);

/// K-nearest-neighbours over rank vectors. Training is memorization; the model is
/// immutable and safe to share between threads.
class KnnModel {
 public:
  KnnModel(std::vector<FeatureVector> training, int k, TieBreak tie_break = TieBreak::NearestMember);

  int k() const { return k_; }
  TieBreak tie_break() const { return tie_break_; }
  std::size_t dims() const { return dims_; }
  std::size_t size() const { return training_.size(); }
  const std::vector<FeatureVector>& training() const { return training_; }

  /// Same training data, different K.
  KnnModel with_k(int k) const;

  /// Mode of the K nearest labels. Neighbours are ordered by (distance, training
  /// index); the first K are taken.
  Rating predict(std::span<const double> query) const;
  /// As above; with exclude_self, training entries carrying the query's pipe_id
  /// are not eligible neighbours (leave-one-out scoring of training data).
  Rating predict(const FeatureVector& query, bool exclude_self) const;

  struct Neighbor {
    std::size_t index;
    double squared_distance;
  };
  /// The `count` nearest eligible training entries in (distance, index) order.
  std::vector<Neighbor> nearest(std::span<const double> query, std::size_t count,
                                const std::string* exclude_id = nullptr) const;

  /// Vote over the first k entries of an ordered neighbour list.
  Rating vote(std::span<const Neighbor> ordered, int k) const;

  nlohmann::json to_json() const;
  static KnnModel from_json(const nlohmann::json& doc);

 private:
  std::vector<FeatureVector> training_;
  std::vector<double> points_;  // row-major copy of the training ranks
  int k_;
  TieBreak tie_break_;
  std::size_t dims_;
};

std::vector<Rating> predict_all(const KnnModel& model, std::span<const FeatureVector> eval_set,
                                bool exclude_self);

/// Fraction of eval_set whose prediction differs from its label.
double misclassification(const KnnModel& model, std::span<const FeatureVector> eval_set,
                         bool exclude_self);

struct SweepRow {
  int k = 0;
  std::size_t train_count = 0;
  double train_misclassification = 0;
  std::size_t validation_count = 0;
  double validation_misclassification = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// K with the lowest validation misclassification; ties go to the smaller K.
  int best_k = 0;
};

/// Rows for K = k_min..k_max. Training rates are leave-one-out (self excluded);
/// validation rates use the full training set.
SweepResult sweep_k(std::span<const FeatureVector> train, std::span<const FeatureVector> validation,
                    int k_max, TieBreak tie_break = TieBreak::NearestMember, int k_min = 1);

nlohmann::json to_json(const SweepResult& sweep);
/// k,train_count,train_misclassification,validation_count,validation_misclassification
std::string write_sweep_csv(const SweepResult& sweep);
std::string render_text(const SweepResult& sweep);

}  // namespace pipegrade
