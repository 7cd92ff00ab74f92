// pipegrade command-line driver.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pipegrade/io.hpp"
#include "pipegrade/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pipegrade;

namespace {

struct Options {
  RunConfig config;
  std::optional<fs::path> out;
  std::string format = "text";
  std::string tie_break = "nearest_member";
  std::string model = "knn";
  std::string k_range;
  std::optional<int> k;
};

void add_out(CLI::App* cmd, Options& o) {
  cmd->add_option("-o,--out", o.out, std::string("Output directory (default $") + kOutDirEnv + " or pipegrade-out)");
  cmd->add_option("--format", o.format, "Console report format")->check(CLI::IsMember({"text", "json"}));
}

void add_data(CLI::App* cmd, Options& o, const char* input_help) {
  cmd->add_option("-i,--input", o.config.input, input_help)->required();
  cmd->add_option("--schema", o.config.schema_path, "Factor schema JSON (default: built-in)");
}

void add_model(CLI::App* cmd, Options& o) {
  cmd->add_option("--screening", o.config.screening_path, "Use the retained factors of this screening.json");
  cmd->add_option("--alpha", o.config.alpha, "Screening significance level")->capture_default_str();
  cmd->add_option("--seed", o.config.seed, "Split seed")->capture_default_str();
  cmd->add_option("--train-fraction", o.config.train_fraction, "Training share")->capture_default_str();
  cmd->add_flag("--stratify", o.config.stratify, "Keep class proportions in both partitions");
  cmd->add_option("--k-range", o.k_range, "K range as MIN:MAX (default 1:30)");
  cmd->add_option("--k-max", o.config.k_max, "Upper end of the K range");
  cmd->add_option("--tie-break", o.tie_break, "nearest_member or smallest_rating")
      ->check(CLI::IsMember({"nearest_member", "smallest_rating"}));
}

void finish(Options& o) {
  o.config.out_dir = resolve_out_dir(o.out);
  o.config.format = o.format == "json" ? ReportFormat::Json : ReportFormat::Text;
  o.config.tie_break = parse_tie_break(o.tie_break);
  o.config.model = parse_model_kind(o.model);
  o.config.k = o.k;
  if (!o.k_range.empty()) {
    const auto sep = o.k_range.find_first_of(":-");
    try {
      if (sep == std::string::npos) throw std::invalid_argument("no separator");
      std::size_t used = 0;
      o.config.k_min = std::stoi(o.k_range.substr(0, sep), &used);
      o.config.k_max = std::stoi(o.k_range.substr(sep + 1), &used);
    } catch (const std::exception&) {
      throw Error("--k-range expects MIN:MAX, got '" + o.k_range + "'");
    }
  }
}

void print(const Options& o, const std::string& text, const nlohmann::json& doc) {
  if (o.config.format == ReportFormat::Json) {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

std::string artifacts_line(const fs::path& dir) { return "artifacts in " + dir.string() + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pipegrade: sewer pipe comprehensive condition rating toolkit"};
  app.require_subcommand(1);
  Options o;

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic inspection CSV");
  std::string preset_name;
  std::optional<fs::path> spec_path;
  std::optional<fs::path> gen_output;
  std::optional<std::size_t> gen_n;
  std::optional<std::uint64_t> gen_seed;
  std::optional<double> gen_noise;
  auto* preset_opt = gen->add_option("--preset", preset_name, "Built-in spec")->check(CLI::IsMember(preset_names()));
  gen->add_option("--spec", spec_path, "Generator spec JSON")->excludes(preset_opt);
  gen->add_option("--n", gen_n, "Override the record count");
  gen->add_option("--seed", gen_seed, "Override the seed");
  gen->add_option("--noise", gen_noise, "Override the label-noise rate");
  gen->add_option("--output", gen_output, "CSV path (default <out>/records.csv)");
  add_out(gen, o);

  auto* ingest = app.add_subcommand("ingest", "Parse and clean an inspection CSV");
  add_data(ingest, o, "Raw inspection CSV");
  ingest->add_option("--columns", o.config.columns_path, "Column map (canonical=Header lines)");
  ingest->add_option("--rules", o.config.rules_path, "Validation rules JSON");
  add_out(ingest, o);

  auto* screen_cmd = app.add_subcommand("screen", "Encode cleaned records and run normality screening");
  add_data(screen_cmd, o, "Cleaned CSV");
  screen_cmd->add_option("--alpha", o.config.alpha, "Significance level")->capture_default_str();
  add_out(screen_cmd, o);

  auto* sweep = app.add_subcommand("sweep", "Misclassification rate for each K");
  add_data(sweep, o, "Cleaned CSV");
  add_model(sweep, o);
  add_out(sweep, o);

  auto* train = app.add_subcommand("train", "Fit a model and save it");
  add_data(train, o, "Cleaned CSV");
  add_model(train, o);
  train->add_option("-k,--k", o.k, "Fixed K (default: best K of the sweep)");
  train->add_option("--model", o.model, "knn or naive_bayes")->check(CLI::IsMember({"knn", "naive_bayes"}));
  train->add_option("--smoothing", o.config.smoothing, "Naive Bayes additive smoothing")->capture_default_str();
  add_out(train, o);

  auto* evaluate = app.add_subcommand("evaluate", "Score labelled records against a saved model");
  fs::path model_path;
  fs::path records_path;
  bool exclude_self = false;
  evaluate->add_option("-m,--model", model_path, "model.json")->required();
  evaluate->add_option("-i,--input", records_path, "Labelled records CSV")->required();
  evaluate->add_option("--columns", o.config.columns_path, "Column map");
  evaluate->add_flag("--exclude-self", exclude_self, "Skip training entries with the same pipe_id (KNN)");
  add_out(evaluate, o);

  auto* score = app.add_subcommand("score-matrix", "Scores from confusion-matrix CSVs");
  std::vector<std::string> matrix_args;
  score->add_option("--matrix", matrix_args, "NAME=PATH, repeatable; rows predicted, columns actual")->required();
  add_out(score, o);

  auto* predict = app.add_subcommand("predict", "Rate records with a saved model, worst first");
  predict->add_option("-m,--model", model_path, "model.json")->required();
  predict->add_option("-i,--input", records_path, "Records CSV (rating column optional)")->required();
  predict->add_option("--columns", o.config.columns_path, "Column map");
  add_out(predict, o);

  auto* report_cmd = app.add_subcommand("report", "Collect stage reports of a run directory");
  std::optional<fs::path> report_dir;
  report_cmd->add_option("--dir", report_dir, "Run directory (default: output directory)");
  add_out(report_cmd, o);

  auto* pipeline = app.add_subcommand("pipeline", "ingest, screen, sweep, train, evaluate and report in one run");
  add_data(pipeline, o, "Raw inspection CSV");
  pipeline->add_option("--columns", o.config.columns_path, "Column map");
  pipeline->add_option("--rules", o.config.rules_path, "Validation rules JSON");
  add_model(pipeline, o);
  pipeline->add_option("-k,--k", o.k, "Fixed K (default: best K of the sweep)");
  pipeline->add_option("--model", o.model, "knn or naive_bayes")->check(CLI::IsMember({"knn", "naive_bayes"}));
  pipeline->add_option("--smoothing", o.config.smoothing, "Naive Bayes additive smoothing")->capture_default_str();
  add_out(pipeline, o);

  CLI11_PARSE(app, argc, argv);

  try {
    finish(o);
    const fs::path& out = o.config.out_dir;
    if (gen->parsed()) {
      if (preset_name.empty() && !spec_path) throw Error("generate needs --preset or --spec");
      GenSpec spec = spec_path ? GenSpec::load(*spec_path) : preset(preset_name);
      if (gen_n) spec.n = *gen_n;
      if (gen_seed) spec.seed = *gen_seed;
      if (gen_noise) spec.label_noise = *gen_noise;
      const fs::path target = gen_output ? *gen_output : out / "records.csv";
      const GenResult r = cmd_generate(spec, target);
      nlohmann::json doc{{"output", target.string()},
                         {"records", r.records.size()},
                         {"missing", r.missing_ids.size()},
                         {"inconsistent", r.inconsistent_ids.size()},
                         {"noisy", r.noisy_ids.size()},
                         {"spec", spec.to_json()}};
      print(o, "wrote " + std::to_string(r.records.size()) + " records to " + target.string() + " (" +
                   std::to_string(r.missing_ids.size()) + " with a missing factor, " +
                   std::to_string(r.inconsistent_ids.size()) + " inconsistent, " +
                   std::to_string(r.noisy_ids.size()) + " relabelled)\n",
            doc);
    } else if (ingest->parsed()) {
      const auto r = cmd_ingest(o.config);
      print(o, render_text(r.cleaned.report) + artifacts_line(out), to_json(r.cleaned.report));
    } else if (screen_cmd->parsed()) {
      const auto r = cmd_screen(o.config);
      print(o, render_text(r.report) + artifacts_line(out), to_json(r.report));
    } else if (sweep->parsed()) {
      const auto r = cmd_sweep(o.config);
      print(o, render_text(r) + artifacts_line(out), to_json(r));
    } else if (train->parsed()) {
      const auto r = cmd_train(o.config);
      nlohmann::json doc{{"kind", to_string(r.model.kind())}, {"factors", r.model.factors()}};
      std::string text = "trained " + std::string(to_string(r.model.kind())) + " on " +
                         std::to_string(r.model.factors().size()) + " factors";
      if (r.model.kind() == ModelKind::Knn) {
        doc["k"] = std::get<KnnModel>(r.model.model()).k();
        text += ", K = " + std::to_string(std::get<KnnModel>(r.model.model()).k());
      }
      print(o, text + "\n" + artifacts_line(out), doc);
    } else if (evaluate->parsed()) {
      const auto r = cmd_evaluate(model_path, records_path, out, exclude_self, o.config.columns_path);
      print(o, render_text(r.report) + artifacts_line(out), to_json(r.report));
    } else if (score->parsed()) {
      std::vector<std::pair<std::string, fs::path>> matrices;
      for (const auto& arg : matrix_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0) throw Error("--matrix expects NAME=PATH, got '" + arg + "'");
        matrices.emplace_back(arg.substr(0, eq), arg.substr(eq + 1));
      }
      const auto r = cmd_score_matrix(matrices, out);
      print(o, render_text(r) + artifacts_line(out), to_json(r));
    } else if (predict->parsed()) {
      const auto r = cmd_predict(model_path, records_path, out, o.config.columns_path);
      nlohmann::json doc = nlohmann::json::array();
      std::string text;
      for (const auto& p : r) {
        doc.push_back({{"pipe_id", p.pipe_id}, {"predicted_rating", p.predicted}});
        text += p.pipe_id + "," + std::to_string(p.predicted) + "\n";
      }
      print(o, csv_row({"pipe_id", "predicted_rating"}) + text, doc);
    } else if (report_cmd->parsed()) {
      std::cout << cmd_report(report_dir ? *report_dir : out, o.config.format);
    } else if (pipeline->parsed()) {
      const auto r = cmd_pipeline(o.config);
      std::string text = render_text(r.ingest.cleaned.report) + "\n" + render_text(r.screening) + "\n";
      if (r.sweep) text += render_text(*r.sweep) + "\n";
      text += render_text(r.evaluation.report) + artifacts_line(out);
      nlohmann::json doc{{"cleaning", to_json(r.ingest.cleaned.report)},
                         {"screening", to_json(r.screening)},
                         {"k", r.k},
                         {"validation_misclassification", r.validation_misclassification},
                         {"scores", to_json(r.evaluation.report)}};
      if (r.sweep) doc["sweep"] = to_json(*r.sweep);
      print(o, text, doc);
    }
  } catch (const std::exception& e) {
    std::cerr << "pipegrade: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
