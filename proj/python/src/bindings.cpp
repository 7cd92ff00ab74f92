#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pipegrade/io.hpp"
#include "pipegrade/pipeline.hpp"

namespace py = pybind11;
using namespace pipegrade;

namespace {

std::vector<FeatureVector> to_vectors(const std::vector<std::vector<int>>& ranks, const std::vector<int>& labels,
                                      const std::optional<std::vector<std::string>>& ids) {
  if (ranks.size() != labels.size()) throw ModelError("ranks and labels differ in length");
  if (ids && ids->size() != ranks.size()) throw ModelError("ids and ranks differ in length");
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    out.push_back({ids ? (*ids)[i] : std::to_string(i), ranks[i], labels[i]});
  }
  return out;
}

using Grid = std::vector<std::vector<std::int64_t>>;

ConfusionMatrix from_grid(const Grid& grid) {
  if (grid.size() != kNumRatings) throw MetricsError("confusion matrix must be 5x5");
  ConfusionMatrix::Counts counts{};
  for (std::size_t p = 0; p < kNumRatings; ++p) {
    if (grid[p].size() != kNumRatings) throw MetricsError("confusion matrix must be 5x5");
    for (std::size_t a = 0; a < kNumRatings; ++a) counts[p][a] = grid[p][a];
  }
  return ConfusionMatrix(counts);
}

Grid to_grid(const ConfusionMatrix& m) {
  Grid g;
  for (const auto& row : m.counts()) g.emplace_back(row.begin(), row.end());
  return g;
}

py::dict scores_dict(const ClassScores& s) {
  py::dict d;
  d["rating"] = s.rating;
  d["tp"] = s.counts.tp;
  d["fp"] = s.counts.fp;
  d["fn"] = s.counts.fn;
  d["tn"] = s.counts.tn;
  d["accuracy"] = s.accuracy;
  d["precision"] = s.precision;
  d["recall"] = s.recall;
  d["f1"] = s.f1;
  d["precision_defined"] = s.precision_defined;
  d["recall_defined"] = s.recall_defined;
  d["f1_defined"] = s.f1_defined;
  return d;
}

py::object json_to_py(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "pipegrade core: screening, KNN, naive Bayes, metrics and the staged pipeline";
  py::register_exception<Error>(m, "PipegradeError", PyExc_ValueError);

  m.def(
      "shapiro_wilk",
      [](const std::vector<double>& sample) {
        const auto s = shapiro_wilk(sample);
        return py::make_tuple(s.w, s.p_value, s.degenerate);
      },
      py::arg("sample"), "Shapiro-Wilk (W, p, degenerate). W is NaN for a constant sample.");

  m.def(
      "split_counts",
      [](std::size_t n, double train_fraction, std::uint64_t seed) {
        std::vector<FeatureVector> vs(n);
        for (std::size_t i = 0; i < n; ++i) vs[i] = {std::to_string(i), {1}, 1};
        const auto s = split(vs, {train_fraction, seed, false});
        return py::make_tuple(s.train.size(), s.validation.size());
      },
      py::arg("n"), py::arg("train_fraction") = 0.75, py::arg("seed") = 1);

  py::class_<KnnModel>(m, "KnnModel")
      .def(py::init([](const std::vector<std::vector<int>>& ranks, const std::vector<int>& labels, int k,
                       const std::string& tie_break, const std::optional<std::vector<std::string>>& ids) {
             return KnnModel(to_vectors(ranks, labels, ids), k, parse_tie_break(tie_break));
           }),
           py::arg("ranks"), py::arg("labels"), py::arg("k"), py::arg("tie_break") = "nearest_member",
           py::arg("ids") = py::none())
      .def_property_readonly("k", &KnnModel::k)
      .def_property_readonly("dims", &KnnModel::dims)
      .def("predict", [](const KnnModel& model, const std::vector<double>& q) { return model.predict(q); })
      .def("predict_many", [](const KnnModel& model, const std::vector<std::vector<double>>& qs) {
        std::vector<Rating> out;
        for (const auto& q : qs) out.push_back(model.predict(q));
        return out;
      });

  py::class_<NbModel>(m, "NbModel")
      .def_static(
          "fit",
          [](const std::vector<std::vector<int>>& ranks, const std::vector<int>& labels, double smoothing) {
            return NbModel::fit(to_vectors(ranks, labels, std::nullopt), smoothing);
          },
          py::arg("ranks"), py::arg("labels"), py::arg("smoothing") = 1.0)
      .def("prior", &NbModel::prior)
      .def("predict", [](const NbModel& model, const std::vector<int>& q) { return model.predict(q); })
      .def("posteriors", [](const NbModel& model, const std::vector<int>& q) { return model.posteriors(q); });

  m.def(
      "confusion",
      [](const std::vector<int>& predicted, const std::vector<int>& actual) {
        return to_grid(confusion(predicted, actual));
      },
      py::arg("predicted"), py::arg("actual"), "5x5 grid, rows predicted and columns actual.");
  m.def("read_confusion_csv", [](const std::filesystem::path& p) { return to_grid(read_confusion_csv(read_file(p))); });
  m.def("overall_accuracy", [](const Grid& g) { return overall_accuracy(from_grid(g)); });
  m.def("class_scores", [](const Grid& g, int rating) { return scores_dict(class_scores(from_grid(g), rating)); });
  m.def(
      "score_matrices",
      [](const std::vector<std::pair<std::string, std::filesystem::path>>& named, const std::filesystem::path& out) {
        return json_to_py(to_json(cmd_score_matrix(named, out)));
      },
      py::arg("matrices"), py::arg("out_dir"));

  m.def(
      "generate_csv",
      [](const std::string& preset_name, const std::filesystem::path& output, std::optional<std::size_t> n,
         std::optional<std::uint64_t> seed, std::optional<double> noise) {
        GenSpec spec = preset(preset_name);
        if (n) spec.n = *n;
        if (seed) spec.seed = *seed;
        if (noise) spec.label_noise = *noise;
        return cmd_generate(spec, output).records.size();
      },
      py::arg("preset"), py::arg("output"), py::arg("n") = py::none(), py::arg("seed") = py::none(),
      py::arg("noise") = py::none());

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& input, const std::filesystem::path& out_dir, double alpha, std::uint64_t seed,
         int k_max, std::optional<int> k, const std::string& model) {
        RunConfig cfg;
        cfg.input = input;
        cfg.out_dir = out_dir;
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.k_max = k_max;
        cfg.k = k;
        cfg.model = parse_model_kind(model);
        const auto r = cmd_pipeline(cfg);
        py::dict d;
        d["k"] = r.k;
        d["validation_misclassification"] = r.validation_misclassification;
        d["retained"] = r.screening.retained;
        d["confusion"] = to_grid(r.evaluation.confusion);
        d["overall_accuracy"] = r.evaluation.report.models.front().overall_accuracy;
        std::vector<std::string> artifacts;
        for (const auto& a : r.artifacts) artifacts.push_back(a.string());
        d["artifacts"] = artifacts;
        return d;
      },
      py::arg("input"), py::arg("out_dir"), py::arg("alpha") = kDefaultAlpha, py::arg("seed") = 1,
      py::arg("k_max") = 30, py::arg("k") = py::none(), py::arg("model") = "knn");
}
