#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "pipegrade/io.hpp"
#include "pipegrade/metrics.hpp"
#include "pipegrade/rng.hpp"

using namespace pipegrade;

namespace {

ConfusionMatrix fixture(const std::string& name) {
  return read_confusion_csv(read_file(test::data_dir() / "fixtures" / (name + "_confusion.csv")));
}

double round_to(double v, int digits) {
  const double s = std::pow(10.0, digits);
  return std::round(v * s) / s;
}

ConfusionMatrix random_matrix(Rng& rng, int max_cell) {
  ConfusionMatrix m;
  for (Rating p = 1; p <= 5; ++p)
    for (Rating a = 1; a <= 5; ++a) m.add(p, a, static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_cell + 1))));
  if (m.total() == 0) m.add(1, 1);
  return m;
}

}  // namespace

TEST_CASE("overall accuracy of the fixture matrices") {
  const auto knn = fixture("knn");
  const auto ahp = fixture("ahp");
  const auto nbc = fixture("nbc");
  CHECK(knn.total() == 310);
  CHECK(ahp.total() == 310);
  CHECK(nbc.total() == 310);
  CHECK(knn.trace() == 227);
  CHECK(ahp.trace() == 29);
  CHECK(nbc.trace() == 164);
  CHECK(std::abs(100 * overall_accuracy(knn) - 73.23) < 0.005);
  CHECK(std::abs(100 * overall_accuracy(ahp) - 9.35) < 0.005);
  CHECK(std::abs(100 * overall_accuracy(nbc) - 52.90) < 0.005);
  CHECK(format_percent(overall_accuracy(knn)) == "73.23%");
  CHECK(format_percent(overall_accuracy(nbc)) == "52.90%");
}

TEST_CASE("per-rating scores of the KNN matrix") {
  const auto m = fixture("knn");
  struct Row {
    Rating c;
    double accuracy_pct, precision, recall, f1;
  };
  const Row expected[] = {
      {1, 95.81, 0.69, 0.88, 0.77}, {2, 89.35, 0.77, 0.71, 0.74}, {3, 85.16, 0.74, 0.76, 0.75},
      {4, 86.13, 0.77, 0.65, 0.70}, {5, 90.00, 0.66, 0.78, 0.71},
  };
  for (const auto& e : expected) {
    CAPTURE(e.c);
    const auto s = class_scores(m, e.c);
    CHECK(std::abs(round_to(100 * s.accuracy, 2) - e.accuracy_pct) < 0.005);
    CHECK(std::abs(round_to(s.precision, 2) - e.precision) < 0.005);
    CHECK(std::abs(round_to(s.recall, 2) - e.recall) < 0.005);
    CHECK(std::abs(round_to(s.f1, 2) - e.f1) < 0.005);
  }
  const auto one = class_scores(m, 1);
  CHECK(one.counts.tp == 22);
  CHECK(one.counts.fp == 10);
  CHECK(one.counts.fn == 3);
  CHECK(one.counts.tn == 275);
}

TEST_CASE("confusion from label lists") {
  const std::vector<Rating> r{1, 2, 3, 4, 5};
  const auto m = confusion(r, r);
  for (Rating p = 1; p <= 5; ++p)
    for (Rating a = 1; a <= 5; ++a) CHECK(m.at(p, a) == (p == a ? 1 : 0));
  for (Rating c = 1; c <= 5; ++c) {
    const auto s = class_scores(m, c);
    CHECK(s.accuracy == 1.0);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
  // rows are predictions, columns actuals
  const std::vector<Rating> pred{2}, act{4};
  CHECK(confusion(pred, act).at(2, 4) == 1);
  CHECK(confusion(pred, act).column_sum(4) == 1);

  CHECK_THROWS_WITH_AS(confusion({}, {}), "empty evaluation", MetricsError);
  const std::vector<Rating> two{1, 2};
  CHECK_THROWS_AS(confusion(two, r), MetricsError);
  const std::vector<Rating> bad{6};
  CHECK_THROWS_AS(confusion(bad, bad), MetricsError);
  CHECK_THROWS_AS(overall_accuracy(ConfusionMatrix{}), MetricsError);
  CHECK_THROWS_AS(class_scores(ConfusionMatrix{}, 1), MetricsError);
}

TEST_CASE("undefined scores are zero and flagged") {
  ConfusionMatrix m;
  m.add(1, 1, 4);
  const auto s = class_scores(m, 3);
  CHECK(s.precision == 0.0);
  CHECK_FALSE(s.precision_defined);
  CHECK_FALSE(s.recall_defined);
  CHECK_FALSE(s.f1_defined);
  CHECK(s.accuracy == 1.0);
  const NamedMatrix nm{"only", m};
  const auto text = render_text(report(std::span(&nm, 1)));
  CHECK(text.find("0*") != std::string::npos);
}

TEST_CASE("confusion CSV round-trip and errors") {
  const auto m = fixture("ahp");
  CHECK(read_confusion_csv(write_confusion_csv(m)) == m);
  CHECK(write_confusion_csv(m).rfind("predicted\\actual,1,2,3,4,5\n", 0) == 0);
  CHECK_THROWS_AS(read_confusion_csv(""), MetricsError);
  CHECK_THROWS_AS(read_confusion_csv("x,1,2,3,5,4\n"), MetricsError);
  const std::string head = "p,1,2,3,4,5\n";
  CHECK_THROWS_AS(read_confusion_csv(head + "1,1,2,3,4,5\n"), MetricsError);
  CHECK_THROWS_AS(read_confusion_csv(head + "1,1,2,3,4\n"), MetricsError);
  CHECK_THROWS_AS(read_confusion_csv(head + "2,0,0,0,0,0\n1,0,0,0,0,0\n3,0,0,0,0,0\n4,0,0,0,0,0\n5,0,0,0,0,0\n"),
                  MetricsError);
  CHECK_THROWS_AS(read_confusion_csv(head + "1,-1,0,0,0,0\n2,0,0,0,0,0\n3,0,0,0,0,0\n4,0,0,0,0,0\n5,0,0,0,0,0\n"),
                  MetricsError);
  CHECK_THROWS_AS(read_confusion_csv(head + "1,a,0,0,0,0\n2,0,0,0,0,0\n3,0,0,0,0,0\n4,0,0,0,0,0\n5,0,0,0,0,0\n"),
                  MetricsError);
}

TEST_CASE("metric identities on random matrices") {
  Rng rng(1000);
  for (int t = 0; t < 1000; ++t) {
    const auto m = random_matrix(rng, t % 3 == 0 ? 2 : 60);
    std::int64_t tp_sum = 0;
    for (Rating c = 1; c <= 5; ++c) {
      const auto s = class_scores(m, c);
      const auto& k = s.counts;
      tp_sum += k.tp;
      CHECK(k.tp + k.tn + k.fp + k.fn == m.total());
      if (s.precision_defined && s.recall_defined && s.precision + s.recall > 0) {
        CHECK(std::abs(s.f1 - 2 * s.precision * s.recall / (s.precision + s.recall)) < 1e-12);
      }
      CHECK(s.accuracy >= 0);
      CHECK(s.accuracy <= 1);
    }
    CHECK(tp_sum == m.trace());
    CHECK(overall_accuracy(m) == static_cast<double>(m.trace()) / static_cast<double>(m.total()));
  }
}

TEST_CASE("comparison report") {
  const std::vector<NamedMatrix> all{{"KNN", fixture("knn")}, {"AHP", fixture("ahp")}, {"NBC", fixture("nbc")}};
  const auto r = report(all, {"a note"});
  REQUIRE(r.models.size() == 3);
  const auto text = render_text(r);
  CHECK(text.find("73.23%") != std::string::npos);
  CHECK(text.find("9.35%") != std::string::npos);
  CHECK(text.find("52.90%") != std::string::npos);
  CHECK(text.find("95.81%") != std::string::npos);
  CHECK(text.find("a note") != std::string::npos);
  const auto j = to_json(r);
  CHECK(j.at("models").size() == 3);
  const auto csv = write_scores_csv(r);
  CHECK(csv.rfind("model,rating,tp,fp,fn,tn,accuracy,precision,recall,f1,undefined\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 6);
  CHECK_THROWS_AS(report({}), MetricsError);

  ConfusionMatrix perfect;
  for (Rating c = 1; c <= 5; ++c) perfect.add(c, c, 7);
  const NamedMatrix p{"perfect", perfect};
  const auto single = report(std::span(&p, 1));
  CHECK(single.models[0].overall_accuracy == 1.0);
  CHECK(render_text(single).find("100.00%") != std::string::npos);
}
