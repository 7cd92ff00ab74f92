#include "pipegrade/screening.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "pipegrade/io.hpp"

namespace pipegrade {

using nlohmann::json;

std::string_view to_string(Verdict verdict) { return verdict == Verdict::Keep ? "keep" : "drop"; }

ScreeningReport screen(const EncodedDataset& data, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw StatsError("alpha must lie in [0, 1]");
  if (data.rows.empty()) throw StatsError("cannot screen an empty dataset");

  ScreeningReport report;
  report.alpha = alpha;
  std::vector<double> column(data.rows.size());
  for (std::size_t f = 0; f < data.factors.size(); ++f) {
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
      column[r] = static_cast<double>(data.rows[r].ranks.at(f));
    }
    SwResult result{data.factors[f], shapiro_wilk(column), Verdict::Drop};
    if (!result.stat.degenerate && result.stat.p_value > alpha) {
      result.verdict = Verdict::Keep;
      report.retained.push_back(result.factor);
    }
    report.results.push_back(std::move(result));
  }
  return report;
}

json to_json(const ScreeningReport& report) {
  json doc{{"alpha", report.alpha}, {"retained", report.retained}};
  doc["results"] = json::array();
  for (const auto& r : report.results) {
    json j{{"factor", r.factor},
           {"n", r.stat.n},
           {"p_value", r.stat.p_value},
           {"degenerate", r.stat.degenerate},
           {"verdict", to_string(r.verdict)}};
    j["W"] = std::isnan(r.stat.w) ? json(nullptr) : json(r.stat.w);
    doc["results"].push_back(std::move(j));
  }
  return doc;
}

ScreeningReport screening_from_json(const json& doc) {
  ScreeningReport report;
  try {
    report.alpha = doc.at("alpha").get<double>();
    report.retained = doc.at("retained").get<std::vector<std::string>>();
    for (const auto& j : doc.at("results")) {
      SwResult r;
      r.factor = j.at("factor").get<std::string>();
      r.stat.n = j.at("n").get<std::size_t>();
      r.stat.w = j.at("W").is_null() ? std::nan("") : j.at("W").get<double>();
      r.stat.p_value = j.at("p_value").get<double>();
      r.stat.degenerate = j.at("degenerate").get<bool>();
      r.verdict = j.at("verdict").get<std::string>() == "keep" ? Verdict::Keep : Verdict::Drop;
      report.results.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed screening document: ") + e.what());
  }
  return report;
}

std::string write_screening_csv(const ScreeningReport& report) {
  std::string out = csv_row({"factor", "n", "W", "p_value", "degenerate", "verdict"});
  for (const auto& r : report.results) {
    out += csv_row({r.factor, std::to_string(r.stat.n), std::isnan(r.stat.w) ? "" : format_number(r.stat.w),
                    format_number(r.stat.p_value), r.stat.degenerate ? "true" : "false",
                    std::string(to_string(r.verdict))});
  }
  return out;
}

std::string render_text(const ScreeningReport& report) {
  std::ostringstream out;
  char line[160];
  out << "Shapiro-Wilk screening (keep when p > " << format_number(report.alpha)
      << "; tests run on encoded ranks, ties kept)\n";
  std::snprintf(line, sizeof line, "  %-18s %6s %9s %11s  %s\n", "Factor", "n", "W", "P value", "Verdict");
  out << line;
  for (const auto& r : report.results) {
    char w[32];
    char p[32];
    if (r.stat.degenerate) {
      std::snprintf(w, sizeof w, "%s", "-");
    } else {
      std::snprintf(w, sizeof w, "%.5f", r.stat.w);
    }
    std::snprintf(p, sizeof p, r.stat.p_value >= 0.001 || r.stat.p_value == 0 ? "%.3f" : "%.2e", r.stat.p_value);
    std::snprintf(line, sizeof line, "  %-18s %6zu %9s %11s  %s%s\n", r.factor.c_str(), r.stat.n, w, p,
                  std::string(to_string(r.verdict)).c_str(), r.stat.degenerate ? " (constant column)" : "");
    out << line;
  }
  out << "  retained " << report.retained.size() << " of " << report.results.size() << ":";
  for (const auto& f : report.retained) out << " " << f;
  out << "\n";
  return out.str();
}

}  // namespace pipegrade
