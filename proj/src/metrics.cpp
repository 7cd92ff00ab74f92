#include "pipegrade/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "pipegrade/io.hpp"

namespace pipegrade {

using nlohmann::json;

namespace {

std::size_t slot(Rating r) {
  if (!is_rating(r)) throw MetricsError("rating " + std::to_string(r) + " out of range 1–5");
  return static_cast<std::size_t>(r - 1);
}

double ratio(std::int64_t num, std::int64_t den, bool& defined) {
  defined = den != 0;
  return defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

std::int64_t parse_count(const std::string& cell, std::size_t line) {
  const std::string t = trim(cell);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw MetricsError("line " + std::to_string(line) + ": count '" + t + "' is not an integer");
  }
  if (v < 0) throw MetricsError("line " + std::to_string(line) + ": negative count");
  return v;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(const Counts& counts) : counts_(counts) {
  for (const auto& row : counts_) {
    for (auto v : row) {
      if (v < 0) throw MetricsError("confusion matrix counts must be non-negative");
    }
  }
}

std::int64_t ConfusionMatrix::at(Rating predicted, Rating actual) const {
  return counts_[slot(predicted)][slot(actual)];
}

void ConfusionMatrix::add(Rating predicted, Rating actual, std::int64_t count) {
  auto& cell = counts_[slot(predicted)][slot(actual)];
  if (cell + count < 0) throw MetricsError("confusion matrix counts must be non-negative");
  cell += count;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts_) {
    for (auto v : row) t += v;
  }
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < kNumRatings; ++i) t += counts_[i][i];
  return t;
}

std::int64_t ConfusionMatrix::row_sum(Rating predicted) const {
  std::int64_t t = 0;
  for (auto v : counts_[slot(predicted)]) t += v;
  return t;
}

std::int64_t ConfusionMatrix::column_sum(Rating actual) const {
  std::int64_t t = 0;
  for (const auto& row : counts_) t += row[slot(actual)];
  return t;
}

ConfusionMatrix confusion(std::span<const Rating> predictions, std::span<const Rating> actuals) {
  if (predictions.size() != actuals.size()) {
    throw MetricsError("length mismatch: " + std::to_string(predictions.size()) + " predictions, " +
                       std::to_string(actuals.size()) + " actuals");
  }
  if (predictions.empty()) throw MetricsError("empty evaluation");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < predictions.size(); ++i) m.add(predictions[i], actuals[i]);
  return m;
}

ConfusionMatrix read_confusion_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  CsvReader reader(in);
  auto header = reader.next();
  if (!header) throw MetricsError("confusion matrix file is empty");
  auto expect_labels = [](const std::vector<std::string>& cells, std::size_t line) {
    if (cells.size() != kNumRatings + 1) {
      throw MetricsError("line " + std::to_string(line) + ": expected 6 cells, found " + std::to_string(cells.size()));
    }
  };
  expect_labels(*header, reader.line());
  for (int a = 1; a <= kNumRatings; ++a) {
    if (trim((*header)[static_cast<std::size_t>(a)]) != std::to_string(a)) {
      throw MetricsError("header must list actual ratings 1 to 5 in order");
    }
  }
  ConfusionMatrix m;
  int p = 0;
  while (auto row = reader.next()) {
    expect_labels(*row, reader.line());
    ++p;
    if (p > kNumRatings || trim((*row)[0]) != std::to_string(p)) {
      throw MetricsError("line " + std::to_string(reader.line()) + ": rows must list predicted ratings 1 to 5 in order");
    }
    for (int a = 1; a <= kNumRatings; ++a) {
      m.add(p, a, parse_count((*row)[static_cast<std::size_t>(a)], reader.line()));
    }
  }
  if (p != kNumRatings) throw MetricsError("expected 5 predicted-rating rows, found " + std::to_string(p));
  return m;
}

std::string write_confusion_csv(const ConfusionMatrix& m) {
  std::string out = csv_row({"predicted\\actual", "1", "2", "3", "4", "5"});
  for (int p = 1; p <= kNumRatings; ++p) {
    std::vector<std::string> cells{std::to_string(p)};
    for (int a = 1; a <= kNumRatings; ++a) cells.push_back(std::to_string(m.at(p, a)));
    out += csv_row(cells);
  }
  return out;
}

double overall_accuracy(const ConfusionMatrix& m) {
  const auto total = m.total();
  if (total == 0) throw MetricsError("empty evaluation");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

OneVsRest one_vs_rest(const ConfusionMatrix& m, Rating c) {
  OneVsRest o;
  o.tp = m.at(c, c);
  o.fp = m.row_sum(c) - o.tp;
  o.fn = m.column_sum(c) - o.tp;
  o.tn = m.total() - o.tp - o.fp - o.fn;
  return o;
}

ClassScores class_scores(const ConfusionMatrix& m, Rating c) {
  const auto total = m.total();
  if (total == 0) throw MetricsError("empty evaluation");
  ClassScores s;
  s.rating = c;
  s.counts = one_vs_rest(m, c);
  const auto& o = s.counts;
  s.accuracy = static_cast<double>(o.tp + o.tn) / static_cast<double>(total);
  s.precision = ratio(o.tp, o.tp + o.fp, s.precision_defined);
  s.recall = ratio(o.tp, o.tp + o.fn, s.recall_defined);
  s.f1 = ratio(2 * o.tp, 2 * o.tp + o.fp + o.fn, s.f1_defined);
  return s;
}

ModelScores score(std::string name, const ConfusionMatrix& m) {
  ModelScores s;
  s.name = std::move(name);
  s.matrix = m;
  s.overall_accuracy = overall_accuracy(m);
  for (int c = 1; c <= kNumRatings; ++c) s.classes[static_cast<std::size_t>(c - 1)] = class_scores(m, c);
  return s;
}

ComparisonReport report(std::span<const NamedMatrix> matrices, std::vector<std::string> notes) {
  if (matrices.empty()) throw MetricsError("report needs at least one confusion matrix");
  ComparisonReport r;
  for (const auto& nm : matrices) r.models.push_back(score(nm.name, nm.matrix));
  r.notes = std::move(notes);
  return r;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

std::string render_text(const ComparisonReport& r) {
  std::ostringstream out;
  out << "Confusion matrices are read with rows = predicted rating, columns = actual rating.\n";
  out << "Scores are one-vs-rest per rating; an undefined precision, recall or F1 (zero denominator) shows as 0*.\n";
  for (const auto& n : r.notes) out << n << "\n";
  out << "\n";

  const std::size_t m = r.models.size();
  std::size_t width = 8;
  for (const auto& s : r.models) width = std::max(width, s.name.size() + 1);

  auto pad = [](const std::string& s, std::size_t w) {
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
  };

  out << "Overall accuracy\n";
  out << "  " << std::string(8, ' ');
  for (const auto& s : r.models) out << pad(s.name, width + 1);
  out << "\n  Accuracy";
  for (const auto& s : r.models) out << pad(format_percent(s.overall_accuracy), width + 1);
  out << "\n\n";

  out << "Accuracy, precision, recall and F1 by rating\n";
  const char* groups[] = {"Accuracy", "Precision", "Recall", "F1 Score"};
  const std::size_t group_width = m * (width + 1);
  out << "  Rating";
  for (const char* g : groups) out << "  " << pad(g, group_width);
  out << "\n  " << std::string(6, ' ');
  for (std::size_t g = 0; g < 4; ++g) {
    out << "  ";
    for (const auto& s : r.models) out << pad(s.name, width + 1);
  }
  out << "\n";
  char buf[32];
  for (int c = 1; c <= kNumRatings; ++c) {
    out << "  " << pad(std::to_string(c), 6);
    for (std::size_t g = 0; g < 4; ++g) {
      out << "  ";
      for (const auto& s : r.models) {
        const auto& cs = s.classes[static_cast<std::size_t>(c - 1)];
        std::string cell;
        if (g == 0) {
          cell = format_percent(cs.accuracy);
        } else {
          const double v = g == 1 ? cs.precision : g == 2 ? cs.recall : cs.f1;
          const bool defined = g == 1 ? cs.precision_defined : g == 2 ? cs.recall_defined : cs.f1_defined;
          std::snprintf(buf, sizeof buf, "%.2f%s", v, defined ? "" : "*");
          cell = buf;
        }
        out << pad(cell, width + 1);
      }
    }
    out << "\n";
  }
  return out.str();
}

json to_json(const ComparisonReport& r) {
  json doc{{"orientation", "rows=predicted,columns=actual"}, {"notes", r.notes}};
  doc["models"] = json::array();
  for (const auto& s : r.models) {
    json jm{{"name", s.name}, {"overall_accuracy", s.overall_accuracy}, {"total", s.matrix.total()},
            {"trace", s.matrix.trace()}};
    jm["confusion"] = s.matrix.counts();
    jm["classes"] = json::array();
    for (const auto& c : s.classes) {
      jm["classes"].push_back({{"rating", c.rating},
                               {"tp", c.counts.tp},
                               {"fp", c.counts.fp},
                               {"fn", c.counts.fn},
                               {"tn", c.counts.tn},
                               {"accuracy", c.accuracy},
                               {"precision", c.precision},
                               {"recall", c.recall},
                               {"f1", c.f1},
                               {"precision_defined", c.precision_defined},
                               {"recall_defined", c.recall_defined},
                               {"f1_defined", c.f1_defined}});
    }
    doc["models"].push_back(std::move(jm));
  }
  return doc;
}

std::string write_scores_csv(const ComparisonReport& r) {
  std::string out = csv_row({"model", "rating", "tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "f1",
                             "undefined"});
  for (const auto& s : r.models) {
    out += csv_row({s.name, "overall", std::to_string(s.matrix.trace()), "", "", "",
                    format_number(s.overall_accuracy), "", "", "", ""});
    for (const auto& c : s.classes) {
      std::string undefined;
      auto flag = [&](bool defined, const char* name) {
        if (defined) return;
        if (!undefined.empty()) undefined += ";";
        undefined += name;
      };
      flag(c.precision_defined, "precision");
      flag(c.recall_defined, "recall");
      flag(c.f1_defined, "f1");
      out += csv_row({s.name, std::to_string(c.rating), std::to_string(c.counts.tp), std::to_string(c.counts.fp),
                      std::to_string(c.counts.fn), std::to_string(c.counts.tn), format_number(c.accuracy),
                      format_number(c.precision), format_number(c.recall), format_number(c.f1), undefined});
    }
  }
  return out;
}

}  // namespace pipegrade
