#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "helpers.hpp"
#include "pipegrade/io.hpp"
#include "pipegrade/pipeline.hpp"

using namespace pipegrade;
namespace fs = std::filesystem;

namespace {

fs::path write_generated(const fs::path& dir, const std::string& preset_name, std::size_t n, std::uint64_t seed) {
  GenSpec spec = preset(preset_name);
  spec.n = n;
  spec.seed = seed;
  const auto path = dir / "input.csv";
  cmd_generate(spec, path);
  return path;
}

RunConfig config_for(const fs::path& dir, const fs::path& input) {
  RunConfig c;
  c.input = input;
  c.out_dir = dir / "out";
  c.alpha = 0.0;
  c.k_max = 15;
  c.seed = 9;
  return c;
}

}  // namespace

TEST_CASE("pipeline writes consistent artifacts") {
  const auto dir = test::scratch("pipeline_full");
  const auto cfg = config_for(dir, write_generated(dir, "noisy_separable", 200, 5));
  const auto out = cmd_pipeline(cfg);
  for (const auto& a : out.artifacts) CHECK_MESSAGE(fs::exists(a), a.string());
  for (const char* f : {"cleaned.csv", "screening.json", "sweep.csv", "model.json", "confusion.csv", "report.txt"}) {
    CHECK(fs::exists(cfg.out_dir / f));
  }
  CHECK(out.screening.retained.size() == 10);
  REQUIRE(out.sweep);
  CHECK(out.sweep->rows.size() == 15);
  CHECK(out.k == out.sweep->best_k);
  const auto& m = out.evaluation.confusion;
  CHECK(m.total() == 50);
  CHECK(static_cast<double>(m.trace()) / static_cast<double>(m.total()) ==
        doctest::Approx(1.0 - out.validation_misclassification).epsilon(1e-12));
  // The confusion file on disk agrees with the in-memory one.
  CHECK(read_confusion_csv(read_file(cfg.out_dir / "confusion.csv")) == m);
  CHECK(read_file(cfg.out_dir / "report.txt").find("chosen K") != std::string::npos);
}

TEST_CASE("separable data is classified perfectly at K = 1") {
  const auto dir = test::scratch("pipeline_separable");
  auto cfg = config_for(dir, write_generated(dir, "separable", 160, 3));
  cfg.k = 1;
  const auto out = cmd_pipeline(cfg);
  CHECK(out.k == 1);
  CHECK(out.validation_misclassification == 0.0);
  const auto& m = out.evaluation.confusion;
  CHECK(m.trace() == m.total());
}

TEST_CASE("naive Bayes pipeline") {
  const auto dir = test::scratch("pipeline_nb");
  auto cfg = config_for(dir, write_generated(dir, "separable", 160, 4));
  cfg.model = ModelKind::NaiveBayes;
  const auto out = cmd_pipeline(cfg);
  CHECK_FALSE(out.sweep);
  CHECK(out.validation_misclassification == 0.0);
  const auto model = TrainedModel::load(cfg.out_dir / "model.json");
  CHECK(model.kind() == ModelKind::NaiveBayes);
}

TEST_CASE("K larger than the training set is a stage error") {
  const auto dir = test::scratch("pipeline_bigk");
  auto cfg = config_for(dir, write_generated(dir, "separable", 20, 1));
  cfg.k_max = 30;
  try {
    cmd_pipeline(cfg);
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "sweep");
    CHECK(std::string(e.what()).find("k exceeds training size (30 > 15)") != std::string::npos);
  }
}

TEST_CASE("missing input names the failing stage") {
  const auto dir = test::scratch("pipeline_missing");
  auto cfg = config_for(dir, dir / "absent.csv");
  CHECK_THROWS_AS(cmd_pipeline(cfg), StageError);
  try {
    cmd_ingest(cfg);
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
  }
}

TEST_CASE("train, evaluate and predict through saved models") {
  const auto dir = test::scratch("pipeline_stages");
  auto cfg = config_for(dir, write_generated(dir, "separable", 120, 8));
  const auto ingested = cmd_ingest(cfg);
  cfg.input = cfg.out_dir / "cleaned.csv";
  cfg.k = 1;
  const auto trained = cmd_train(cfg);
  const auto model_path = cfg.out_dir / "model.json";

  // Round-trip through JSON keeps every prediction.
  const auto loaded = TrainedModel::load(model_path);
  CHECK(loaded.to_json() == trained.model.to_json());

  // K = 1 on its own training records, self included, reproduces the labels.
  const auto eval = cmd_evaluate(model_path, cfg.out_dir / "train.csv", dir / "eval");
  CHECK(eval.confusion.trace() == eval.confusion.total());
  // Leave-one-out is allowed to differ.
  CHECK_NOTHROW(cmd_evaluate(model_path, cfg.out_dir / "train.csv", dir / "eval_loo", true));

  const auto preds = cmd_predict(model_path, cfg.out_dir / "validation.csv", dir / "pred");
  CHECK(preds.size() == 30);
  for (std::size_t i = 1; i < preds.size(); ++i) CHECK(preds[i - 1].predicted >= preds[i].predicted);
  const auto csv = read_file(dir / "pred" / "predictions.csv");
  CHECK(csv.rfind("pipe_id,predicted_rating\n", 0) == 0);

  // Unlabelled input is fine for prediction.
  std::string unlabelled = test::header();
  unlabelled += test::row("U1", 3);
  unlabelled.replace(unlabelled.rfind(",3\n"), 3, ",\n");
  write_file_atomic(dir / "unlabelled.csv", unlabelled);
  CHECK(cmd_predict(model_path, dir / "unlabelled.csv", dir / "pred2").size() == 1);

  write_file_atomic(dir / "empty.csv", "");
  CHECK(cmd_predict(model_path, dir / "empty.csv", dir / "pred3").empty());
  CHECK(fs::exists(dir / "pred3" / "predictions.csv"));
}

TEST_CASE("score-matrix and report") {
  const auto dir = test::scratch("pipeline_report");
  const auto fx = test::data_dir() / "fixtures";
  const auto r = cmd_score_matrix({{"KNN", fx / "knn_confusion.csv"}, {"NBC", fx / "nbc_confusion.csv"}}, dir);
  CHECK(r.models.size() == 2);
  CHECK(read_file(dir / "report.txt").find("73.23%") != std::string::npos);
  const auto text = cmd_report(dir, ReportFormat::Text);
  CHECK(text.find("== Scores ==") != std::string::npos);
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK_NOTHROW(cmd_report(dir, ReportFormat::Json));
  const auto empty = test::scratch("pipeline_report_empty");
  CHECK_THROWS_AS(cmd_report(empty, ReportFormat::Text), StageError);
}

TEST_CASE("output directory resolution") {
  ::unsetenv(kOutDirEnv);
  CHECK(resolve_out_dir(std::nullopt) == fs::path("pipegrade-out"));
  ::setenv(kOutDirEnv, "/tmp/from-env", 1);
  CHECK(resolve_out_dir(std::nullopt) == fs::path("/tmp/from-env"));
  CHECK(resolve_out_dir(fs::path("explicit")) == fs::path("explicit"));
  ::unsetenv(kOutDirEnv);
}

TEST_CASE("config validation") {
  RunConfig c;
  c.train_fraction = 1.0;
  CHECK_THROWS(c.validate());
  c = RunConfig{};
  c.alpha = -0.1;
  CHECK_THROWS(c.validate());
  c = RunConfig{};
  c.k_min = 5;
  c.k_max = 2;
  CHECK_THROWS(c.validate());
  CHECK(parse_model_kind("nb") == ModelKind::NaiveBayes);
  CHECK(parse_model_kind("knn") == ModelKind::Knn);
  CHECK_THROWS(parse_model_kind("svm"));
}
