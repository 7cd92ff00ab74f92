#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pipegrade/encoding.hpp"
#include "pipegrade/ingest.hpp"
#include "pipegrade/knn.hpp"
#include "pipegrade/metrics.hpp"
#include "pipegrade/naive_bayes.hpp"
#include "pipegrade/screening.hpp"
#include "pipegrade/synthgen.hpp"

namespace pipegrade {

/// A failure inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class ReportFormat { Text, Json };
enum class ModelKind { Knn, NaiveBayes };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Environment variable that replaces the default output directory.
inline constexpr const char* kOutDirEnv = "PIPEGRADE_OUT_DIR";
/// `explicit_dir` when given, else $PIPEGRADE_OUT_DIR, else "pipegrade-out".
std::filesystem::path resolve_out_dir(const std::optional<std::filesystem::path>& explicit_dir);

struct RunConfig {
  std::filesystem::path input;
  std::optional<std::filesystem::path> schema_path;
  std::optional<std::filesystem::path> columns_path;
  std::optional<std::filesystem::path> rules_path;
  /// Retained factors come from this screening.json when set; otherwise
  /// screening runs with `alpha`.
  std::optional<std::filesystem::path> screening_path;
  std::uint64_t seed = 1;
  double train_fraction = 0.75;
  double alpha = kDefaultAlpha;
  int k_min = 1;
  int k_max = 30;
  /// Fixed K; when unset the sweep's best K is used.
  std::optional<int> k;
  TieBreak tie_break = TieBreak::NearestMember;
  bool stratify = false;
  ModelKind model = ModelKind::Knn;
  double smoothing = 1.0;
  std::filesystem::path out_dir = "pipegrade-out";
  ReportFormat format = ReportFormat::Text;

  /// Throws Error when a numeric field is outside its documented range.
  void validate() const;
  SplitSpec split_spec() const { return {train_fraction, seed, stratify}; }
};

/// A fitted classifier plus what is needed to encode new records for it.
class TrainedModel {
 public:
  TrainedModel(FactorSchema schema, std::vector<std::string> factors, SplitSpec split,
               std::variant<KnnModel, NbModel> model);

  const FactorSchema& schema() const { return schema_; }
  const std::vector<std::string>& factors() const { return factors_; }
  const SplitSpec& split() const { return split_; }
  ModelKind kind() const;
  const std::variant<KnnModel, NbModel>& model() const { return model_; }

  /// Encodes under the model's schema and projects onto its factors. Throws
  /// EncodingError or Error on a schema/projection mismatch.
  EncodedDataset encode(std::span<const PipeRecord> records, bool require_label = true) const;
  /// With exclude_self, a KNN model skips training entries sharing the pipe_id.
  Rating predict(const FeatureVector& v, bool exclude_self = false) const;
  std::vector<Rating> predict(std::span<const FeatureVector> vs, bool exclude_self = false) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& doc);
  static TrainedModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  FactorSchema schema_;
  std::vector<std::string> factors_;
  SplitSpec split_;
  std::variant<KnnModel, NbModel> model_;
};

// Stage commands. Each writes its artifacts into config.out_dir atomically and
// wraps failures in StageError.

struct IngestOutcome {
  LoadResult parsed;
  CleanResult cleaned;
};
/// input: raw inspection CSV. Writes cleaned.csv, cleaning_report.{txt,json}.
IngestOutcome cmd_ingest(const RunConfig& config);

struct ScreenOutcome {
  EncodedDataset encoded;
  ScreeningReport report;
};
/// input: cleaned CSV. Writes vectors.csv and screening.{csv,json,txt}.
ScreenOutcome cmd_screen(const RunConfig& config);

struct Prepared {
  FactorSchema schema;
  std::vector<PipeRecord> records;
  EncodedDataset data;  ///< projected onto the retained factors
  std::optional<ScreeningReport> screening;
  Split split;
};
/// Loads cleaned records, encodes, picks the retained factors and splits.
Prepared prepare(const RunConfig& config);

/// input: cleaned CSV. Writes sweep.{csv,json,txt}.
SweepResult cmd_sweep(const RunConfig& config);

struct TrainOutcome {
  TrainedModel model;
  std::optional<SweepResult> sweep;
};
/// input: cleaned CSV. Writes model.json, train.csv and validation.csv (cleaned
/// records of each partition), plus sweep files when K comes from a sweep.
TrainOutcome cmd_train(const RunConfig& config);

struct Prediction {
  std::string pipe_id;
  Rating predicted = 0;
  Rating actual = 0;  ///< 0 when the input has no label
};

struct EvaluateOutcome {
  std::vector<Prediction> predictions;
  ConfusionMatrix confusion;
  ComparisonReport report;
};
/// Scores labelled records against a saved model. Writes predictions.csv,
/// confusion.csv, scores.csv and report.{txt,json}.
EvaluateOutcome cmd_evaluate(const std::filesystem::path& model_path, const std::filesystem::path& records,
                             const std::filesystem::path& out_dir, bool exclude_self = false,
                             const std::optional<std::filesystem::path>& columns = std::nullopt);

/// Reads named confusion-matrix CSVs and writes scores.csv and report.{txt,json}.
ComparisonReport cmd_score_matrix(const std::vector<std::pair<std::string, std::filesystem::path>>& matrices,
                                  const std::filesystem::path& out_dir);

/// One row per record, worst rating first (ties keep input order). Writes
/// predictions.csv with pipe_id,predicted_rating.
std::vector<Prediction> cmd_predict(const std::filesystem::path& model_path, const std::filesystem::path& records,
                                    const std::filesystem::path& out_dir,
                                    const std::optional<std::filesystem::path>& columns = std::nullopt);

/// Writes the generated records CSV to `output`.
GenResult cmd_generate(const GenSpec& spec, const std::filesystem::path& output);

struct PipelineOutcome {
  IngestOutcome ingest;
  ScreeningReport screening;
  std::optional<SweepResult> sweep;
  int k = 0;
  double validation_misclassification = 0;
  EvaluateOutcome evaluation;
  std::vector<std::filesystem::path> artifacts;
};
/// ingest, clean, encode, screen, project, split, sweep, train, evaluate, report.
PipelineOutcome cmd_pipeline(const RunConfig& config);

/// Collects the JSON artifacts in `dir` into summary.txt (or summary.json).
std::string cmd_report(const std::filesystem::path& dir, ReportFormat format);

}  // namespace pipegrade
