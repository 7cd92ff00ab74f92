#include "pipegrade/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "pipegrade/io.hpp"

namespace pipegrade {

namespace fs = std::filesystem;
using nlohmann::json;

StageError::StageError(std::string stage, const std::string& cause)
    : Error("stage " + stage + ": " + cause), stage_(std::move(stage)) {}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Knn ? "knn" : "naive_bayes"; }

ModelKind parse_model_kind(std::string_view text) {
  if (text == "knn") return ModelKind::Knn;
  if (text == "naive_bayes" || text == "nb") return ModelKind::NaiveBayes;
  throw Error("unknown model kind '" + std::string(text) + "' (expected knn or naive_bayes)");
}

fs::path resolve_out_dir(const std::optional<fs::path>& explicit_dir) {
  if (explicit_dir) return *explicit_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "pipegrade-out";
}

void RunConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must lie strictly between 0 and 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
  if (k_min < 1 || k_max < k_min) {
    throw Error("invalid k range " + std::to_string(k_min) + ".." + std::to_string(k_max));
  }
  if (k && *k < 1) throw Error("k must be at least 1");
  if (!(smoothing > 0.0)) throw Error("smoothing must be positive");
}

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

FactorSchema load_schema(const RunConfig& config) {
  return config.schema_path ? FactorSchema::load(*config.schema_path) : FactorSchema::builtin();
}

ColumnMap load_columns(const std::optional<fs::path>& path) {
  return path ? ColumnMap::load(*path) : ColumnMap::defaults();
}

void fail_on_diagnostics(const LoadResult& loaded, const fs::path& path) {
  if (loaded.diagnostics.empty()) return;
  const auto& d = loaded.diagnostics.front();
  throw Error(path.string() + ": " + std::to_string(loaded.diagnostics.size()) +
              " row(s) could not be read; first at line " + std::to_string(d.line) + ": " + d.cause);
}

std::string write_predictions_csv(std::span<const Prediction> rows, bool with_actual) {
  std::string out = with_actual ? csv_row({"pipe_id", "actual_rating", "predicted_rating"})
                                : csv_row({"pipe_id", "predicted_rating"});
  for (const auto& p : rows) {
    out += with_actual ? csv_row({p.pipe_id, std::to_string(p.actual), std::to_string(p.predicted)})
                       : csv_row({p.pipe_id, std::to_string(p.predicted)});
  }
  return out;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::vector<std::string> model_notes(const TrainedModel& model) {
  std::vector<std::string> notes;
  if (model.kind() == ModelKind::Knn) {
    const auto& knn = std::get<KnnModel>(model.model());
    notes.push_back("Model: K-nearest neighbours, K = " + std::to_string(knn.k()) + ", Euclidean distance on ranks, " +
                    "tie-break " + std::string(to_string(knn.tie_break())) + ", " +
                    std::to_string(knn.size()) + " training vectors.");
  } else {
    const auto& nb = std::get<NbModel>(model.model());
    notes.push_back("Model: categorical naive Bayes over ranks 1-5, maximum-likelihood priors, additive smoothing " +
                    format_number(nb.smoothing()) + " on conditionals, ties to the smaller rating.");
  }
  std::string factors = "Factors (" + std::to_string(model.factors().size()) + "):";
  for (const auto& f : model.factors()) factors += " " + f;
  notes.push_back(factors);
  return notes;
}

// Encodes cleaned records and settles the factor set for the run.
Prepared prepare_records(const RunConfig& config, std::vector<PipeRecord> records,
                         std::optional<ScreeningReport> screening) {
  Prepared p{load_schema(config), std::move(records), {}, std::move(screening), {}};
  EncodedDataset full = stage("encode", [&] { return encode_dataset(p.records, p.schema); });
  std::vector<std::string> keep;
  if (p.screening) {
    keep = p.screening->retained;
  } else if (config.screening_path) {
    p.screening = stage("screen", [&] { return screening_from_json(json::parse(read_file(*config.screening_path))); });
    keep = p.screening->retained;
  } else {
    p.screening = stage("screen", [&] { return screen(full, config.alpha); });
    keep = p.screening->retained;
  }
  p.data = stage("project", [&] { return project(full, keep); });
  p.split = stage("split", [&] { return split(p.data.rows, config.split_spec()); });
  return p;
}

std::vector<PipeRecord> load_cleaned(const fs::path& path) {
  LoadResult loaded = load_records(path);
  fail_on_diagnostics(loaded, path);
  return std::move(loaded.records);
}

std::vector<PipeRecord> records_by_id(const std::vector<PipeRecord>& records, std::span<const FeatureVector> part) {
  std::unordered_map<std::string, const PipeRecord*> index;
  for (const auto& r : records) index.emplace(r.pipe_id, &r);
  std::vector<PipeRecord> out;
  out.reserve(part.size());
  for (const auto& v : part) out.push_back(*index.at(v.pipe_id));
  return out;
}

void write_sweep(const SweepResult& sweep, const fs::path& dir) {
  write_file_atomic(dir / "sweep.csv", write_sweep_csv(sweep));
  write_file_atomic(dir / "sweep.json", dump(to_json(sweep)));
  write_file_atomic(dir / "sweep.txt", render_text(sweep));
}

SweepResult run_sweep(const RunConfig& config, const Prepared& p) {
  return stage("sweep", [&] {
    return sweep_k(p.split.train, p.split.validation, config.k_max, config.tie_break, config.k_min);
  });
}

TrainOutcome train_prepared(const RunConfig& config, const Prepared& p) {
  std::optional<SweepResult> sweep;
  std::variant<KnnModel, NbModel> fitted = stage("train", [&]() -> std::variant<KnnModel, NbModel> {
    if (config.model == ModelKind::NaiveBayes) return NbModel::fit(p.split.train, config.smoothing);
    int k;
    if (config.k) {
      k = *config.k;
    } else {
      sweep = run_sweep(config, p);
      k = sweep->best_k;
    }
    return KnnModel(p.split.train, k, config.tie_break);
  });
  TrainedModel model(p.schema, p.data.factors, config.split_spec(), std::move(fitted));
  stage("train", [&] {
    model.save(config.out_dir / "model.json");
    write_file_atomic(config.out_dir / "train.csv", write_records_csv(records_by_id(p.records, p.split.train)));
    write_file_atomic(config.out_dir / "validation.csv",
                      write_records_csv(records_by_id(p.records, p.split.validation)));
    if (sweep) write_sweep(*sweep, config.out_dir);
    return 0;
  });
  return {std::move(model), std::move(sweep)};
}

EvaluateOutcome evaluate_vectors(const TrainedModel& model, std::span<const FeatureVector> vs, bool exclude_self,
                                 const fs::path& out_dir, std::vector<std::string> extra_notes) {
  return stage("evaluate", [&] {
    EvaluateOutcome out;
    if (vs.empty()) throw Error("empty evaluation");
    const auto predicted = model.predict(vs, exclude_self);
    std::vector<Rating> actual;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      out.predictions.push_back({vs[i].pipe_id, predicted[i], vs[i].label});
      actual.push_back(vs[i].label);
    }
    out.confusion = confusion(predicted, actual);
    std::vector<std::string> notes = model_notes(model);
    notes.insert(notes.end(), extra_notes.begin(), extra_notes.end());
    const NamedMatrix named{model.kind() == ModelKind::Knn ? "KNN" : "NBC", out.confusion};
    out.report = report(std::span(&named, 1), notes);
    write_file_atomic(out_dir / "predictions.csv", write_predictions_csv(out.predictions, true));
    write_file_atomic(out_dir / "confusion.csv", write_confusion_csv(out.confusion));
    write_file_atomic(out_dir / "scores.csv", write_scores_csv(out.report));
    write_file_atomic(out_dir / "report.txt", render_text(out.report));
    write_file_atomic(out_dir / "report.json", dump(to_json(out.report)));
    return out;
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// TrainedModel

TrainedModel::TrainedModel(FactorSchema schema, std::vector<std::string> factors, SplitSpec split,
                           std::variant<KnnModel, NbModel> model)
    : schema_(std::move(schema)), factors_(std::move(factors)), split_(split), model_(std::move(model)) {
  if (factors_.empty()) throw ModelError("model has no factors");
  for (const auto& f : factors_) {
    if (!schema_.index_of(f)) throw ModelError("model factor '" + f + "' is not in its schema");
  }
  const std::size_t dims = std::visit([](const auto& m) { return m.dims(); }, model_);
  if (dims != factors_.size()) throw ModelError("model dimension does not match its factor list");
}

ModelKind TrainedModel::kind() const {
  return std::holds_alternative<KnnModel>(model_) ? ModelKind::Knn : ModelKind::NaiveBayes;
}

EncodedDataset TrainedModel::encode(std::span<const PipeRecord> records, bool require_label) const {
  return project(encode_dataset(records, schema_, require_label), factors_);
}

Rating TrainedModel::predict(const FeatureVector& v, bool exclude_self) const {
  if (const auto* knn = std::get_if<KnnModel>(&model_)) return knn->predict(v, exclude_self);
  return std::get<NbModel>(model_).predict(v.ranks);
}

std::vector<Rating> TrainedModel::predict(std::span<const FeatureVector> vs, bool exclude_self) const {
  std::vector<Rating> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.push_back(predict(v, exclude_self));
  return out;
}

json TrainedModel::to_json() const {
  json doc{{"format", "pipegrade-model"},
           {"version", 1},
           {"kind", to_string(kind())},
           {"factors", factors_},
           {"split",
            {{"train_fraction", split_.train_fraction}, {"seed", split_.seed}, {"stratified", split_.stratified}}},
           {"schema", schema_.to_json()}};
  doc["model"] = std::visit([](const auto& m) { return m.to_json(); }, model_);
  return doc;
}

TrainedModel TrainedModel::from_json(const json& doc) {
  try {
    if (doc.value("format", std::string()) != "pipegrade-model") throw ModelError("not a pipegrade model file");
    const auto& s = doc.at("split");
    SplitSpec split{s.at("train_fraction").get<double>(), s.at("seed").get<std::uint64_t>(),
                    s.at("stratified").get<bool>()};
    const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
    std::variant<KnnModel, NbModel> model = kind == ModelKind::Knn
                                                ? std::variant<KnnModel, NbModel>(KnnModel::from_json(doc.at("model")))
                                                : std::variant<KnnModel, NbModel>(NbModel::from_json(doc.at("model")));
    return TrainedModel(FactorSchema::from_json(doc.at("schema")), doc.at("factors").get<std::vector<std::string>>(),
                        split, std::move(model));
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
}

TrainedModel TrainedModel::load(const fs::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

void TrainedModel::save(const fs::path& path) const { write_file_atomic(path, dump(to_json())); }

// ---------------------------------------------------------------------------
// Commands

IngestOutcome cmd_ingest(const RunConfig& config) {
  return stage("ingest", [&] {
    config.validate();
    IngestOutcome out;
    out.parsed = load_records(config.input, load_columns(config.columns_path));
    const ValidationConfig rules =
        config.rules_path ? ValidationConfig::load(*config.rules_path) : ValidationConfig::defaults();
    out.cleaned = clean(out.parsed.records, rules);

    json report = to_json(out.cleaned.report);
    report["parse_diagnostics"] = json::array();
    std::string text = render_text(out.cleaned.report);
    if (!out.parsed.diagnostics.empty()) {
      text += "Rows rejected while reading (" + std::to_string(out.parsed.diagnostics.size()) + "):\n";
      for (const auto& d : out.parsed.diagnostics) {
        report["parse_diagnostics"].push_back({{"line", d.line}, {"pipe_id", d.pipe_id}, {"cause", d.cause}});
        text += "  line " + std::to_string(d.line) + (d.pipe_id.empty() ? "" : " (" + d.pipe_id + ")") + ": " +
                d.cause + "\n";
      }
    }
    write_file_atomic(config.out_dir / "cleaned.csv", write_records_csv(out.cleaned.retained));
    write_file_atomic(config.out_dir / "cleaning_report.json", dump(report));
    write_file_atomic(config.out_dir / "cleaning_report.txt", text);
    return out;
  });
}

ScreenOutcome cmd_screen(const RunConfig& config) {
  config.validate();
  const auto records = stage("screen", [&] { return load_cleaned(config.input); });
  const FactorSchema schema = stage("screen", [&] { return load_schema(config); });
  ScreenOutcome out;
  out.encoded = stage("encode", [&] { return encode_dataset(records, schema); });
  return stage("screen", [&] {
    out.report = screen(out.encoded, config.alpha);
    write_file_atomic(config.out_dir / "vectors.csv", write_vectors_csv(out.encoded));
    write_file_atomic(config.out_dir / "screening.csv", write_screening_csv(out.report));
    write_file_atomic(config.out_dir / "screening.json", dump(to_json(out.report)));
    write_file_atomic(config.out_dir / "screening.txt", render_text(out.report));
    return out;
  });
}

Prepared prepare(const RunConfig& config) {
  config.validate();
  auto records = stage("ingest", [&] { return load_cleaned(config.input); });
  return prepare_records(config, std::move(records), std::nullopt);
}

SweepResult cmd_sweep(const RunConfig& config) {
  const Prepared p = prepare(config);
  SweepResult sweep = run_sweep(config, p);
  stage("sweep", [&] {
    write_sweep(sweep, config.out_dir);
    return 0;
  });
  return sweep;
}

TrainOutcome cmd_train(const RunConfig& config) { return train_prepared(config, prepare(config)); }

EvaluateOutcome cmd_evaluate(const fs::path& model_path, const fs::path& records, const fs::path& out_dir,
                             bool exclude_self, const std::optional<fs::path>& columns) {
  const TrainedModel model = stage("evaluate", [&] { return TrainedModel::load(model_path); });
  const EncodedDataset data = stage("evaluate", [&] {
    LoadResult loaded = load_records(records, load_columns(columns));
    fail_on_diagnostics(loaded, records);
    return model.encode(loaded.records);
  });
  return evaluate_vectors(model, data.rows, exclude_self, out_dir, {});
}

ComparisonReport cmd_score_matrix(const std::vector<std::pair<std::string, fs::path>>& matrices,
                                  const fs::path& out_dir) {
  return stage("score-matrix", [&] {
    std::vector<NamedMatrix> named;
    for (const auto& [name, path] : matrices) {
      try {
        named.push_back({name, read_confusion_csv(read_file(path))});
      } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
      }
    }
    ComparisonReport r = report(named);
    write_file_atomic(out_dir / "scores.csv", write_scores_csv(r));
    write_file_atomic(out_dir / "report.txt", render_text(r));
    write_file_atomic(out_dir / "report.json", dump(to_json(r)));
    return r;
  });
}

std::vector<Prediction> cmd_predict(const fs::path& model_path, const fs::path& records, const fs::path& out_dir,
                                    const std::optional<fs::path>& columns) {
  return stage("predict", [&] {
    const TrainedModel model = TrainedModel::load(model_path);
    std::vector<Prediction> out;
    if (!fs::exists(records)) throw Error("cannot read '" + records.string() + "'");
    if (fs::file_size(records) > 0) {
      LoadResult loaded = load_records(records, load_columns(columns), false);
      fail_on_diagnostics(loaded, records);
      if (!loaded.records.empty()) {
        const EncodedDataset data = model.encode(loaded.records, false);
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
          out.push_back({data.rows[i].pipe_id, model.predict(data.rows[i]), loaded.records[i].comprehensive_rating});
        }
      }
    }
    std::stable_sort(out.begin(), out.end(), [](const Prediction& a, const Prediction& b) {
      return a.predicted > b.predicted;
    });
    write_file_atomic(out_dir / "predictions.csv", write_predictions_csv(out, false));
    return out;
  });
}

GenResult cmd_generate(const GenSpec& spec, const fs::path& output) {
  return stage("generate", [&] {
    GenResult r = generate(spec);
    write_file_atomic(output, write_records_csv(r.records));
    return r;
  });
}

PipelineOutcome cmd_pipeline(const RunConfig& config) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  PipelineOutcome out;
  out.ingest = cmd_ingest(config);
  out.artifacts = {config.out_dir / "cleaned.csv", config.out_dir / "cleaning_report.txt",
                   config.out_dir / "cleaning_report.json"};

  const FactorSchema schema = stage("encode", [&] { return load_schema(config); });
  const EncodedDataset full = stage("encode", [&] { return encode_dataset(out.ingest.cleaned.retained, schema); });
  out.screening = stage("screen", [&] {
    ScreeningReport r = config.screening_path ? screening_from_json(json::parse(read_file(*config.screening_path)))
                                              : screen(full, config.alpha);
    write_file_atomic(config.out_dir / "screening.csv", write_screening_csv(r));
    write_file_atomic(config.out_dir / "screening.json", dump(to_json(r)));
    write_file_atomic(config.out_dir / "screening.txt", render_text(r));
    return r;
  });
  for (const char* f : {"screening.csv", "screening.json", "screening.txt"}) out.artifacts.push_back(config.out_dir / f);

  const Prepared p = prepare_records(config, out.ingest.cleaned.retained, out.screening);
  stage("project", [&] {
    write_file_atomic(config.out_dir / "vectors.csv", write_vectors_csv(p.data));
    return 0;
  });
  out.artifacts.push_back(config.out_dir / "vectors.csv");

  // The sweep table is written for KNN runs even when K is fixed.
  if (config.model == ModelKind::Knn) {
    out.sweep = run_sweep(config, p);
    stage("sweep", [&] {
      write_sweep(*out.sweep, config.out_dir);
      return 0;
    });
    for (const char* f : {"sweep.csv", "sweep.json", "sweep.txt"}) out.artifacts.push_back(config.out_dir / f);
  }
  RunConfig train_config = config;
  if (config.model == ModelKind::Knn && !config.k) train_config.k = out.sweep->best_k;
  TrainOutcome trained = train_prepared(train_config, p);
  for (const char* f : {"model.json", "train.csv", "validation.csv"}) out.artifacts.push_back(config.out_dir / f);

  std::vector<std::string> notes;
  if (config.model == ModelKind::Knn) {
    out.k = std::get<KnnModel>(trained.model.model()).k();
    for (const auto& row : out.sweep->rows) {
      if (row.k == out.k) out.validation_misclassification = row.validation_misclassification;
    }
    char line[256];
    std::snprintf(line, sizeof line,
                  "Validation misclassification at the chosen K = %d is %.5f, so overall accuracy is "
                  "1 - %.5f = %s; a sweep table and an accuracy table from one run cannot disagree on this.",
                  out.k, out.validation_misclassification, out.validation_misclassification,
                  format_percent(1.0 - out.validation_misclassification).c_str());
    notes.push_back(line);
  }
  out.evaluation = evaluate_vectors(trained.model, p.split.validation, false, config.out_dir, notes);
  if (config.model == ModelKind::NaiveBayes) {
    out.validation_misclassification = 1.0 - out.evaluation.report.models.front().overall_accuracy;
  }
  for (const char* f : {"predictions.csv", "confusion.csv", "scores.csv", "report.txt", "report.json"}) {
    out.artifacts.push_back(config.out_dir / f);
  }
  return out;
}

std::string cmd_report(const fs::path& dir, ReportFormat format) {
  return stage("report", [&] {
    struct Section {
      const char* title;
      const char* stem;
    };
    const Section sections[] = {{"Cleaning", "cleaning_report"},
                                {"Screening", "screening"},
                                {"K sweep", "sweep"},
                                {"Scores", "report"}};
    std::string out;
    json doc = json::object();
    std::size_t found = 0;
    for (const auto& s : sections) {
      const fs::path txt = dir / (std::string(s.stem) + ".txt");
      const fs::path js = dir / (std::string(s.stem) + ".json");
      if (format == ReportFormat::Text && fs::exists(txt)) {
        out += "== " + std::string(s.title) + " ==\n" + read_file(txt) + "\n";
        ++found;
      } else if (format == ReportFormat::Json && fs::exists(js)) {
        doc[s.stem] = json::parse(read_file(js));
        ++found;
      }
    }
    if (found == 0) throw Error("no stage reports found in '" + dir.string() + "'");
    if (format == ReportFormat::Json) {
      out = dump(doc);
      write_file_atomic(dir / "summary.json", out);
    } else {
      write_file_atomic(dir / "summary.txt", out);
    }
    return out;
  });
}

}  // namespace pipegrade
