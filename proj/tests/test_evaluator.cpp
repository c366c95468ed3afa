#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tackle/error.hpp"
#include "tackle/evaluator.hpp"

using namespace tackle;

namespace {

std::vector<ScoredSample> as_scores(const std::vector<oracle::Sample>& s) {
  std::vector<ScoredSample> out;
  for (const auto& x : s)
    out.push_back({x.predicted_risky ? 1.0 : 0.0, x.risky ? BinaryLabel::kRisky : BinaryLabel::kSafe});
  return out;
}

void check_against_tally(const std::vector<oracle::Sample>& s) {
  const auto want = oracle::tally(s);
  const auto got = compute_metrics(counts_at(as_scores(s), 0.5));
  for (int m = 0; m < 6; ++m) CHECK(std::fabs(metric_value(got, m) - want[m]) <= 1e-12);
}

double round1(double v) { return std::round(v * 10) / 10; }

}  // namespace

TEST_CASE("metrics equal a per-sample tally, exhaustively for small n") {
  // Every (truth, prediction) vector up to length 8; n = 9..12 by composition.
  for (int n = 1; n <= 8; ++n) {
    const std::uint32_t codes = 1u << (2 * n);
    for (std::uint32_t code = 0; code < codes; ++code) {
      std::vector<oracle::Sample> s(n);
      for (int i = 0; i < n; ++i) s[i] = {bool((code >> (2 * i)) & 1), bool((code >> (2 * i + 1)) & 1)};
      const auto want = oracle::tally(s);
      const auto got = compute_metrics(counts_at(as_scores(s), 0.5));
      for (int m = 0; m < 6; ++m)
        if (std::fabs(metric_value(got, m) - want[m]) > 1e-12) FAIL("mismatch at n=", n, " code=", code);
    }
  }
  for (int n = 9; n <= 12; ++n)
    for (int tp = 0; tp <= n; ++tp)
      for (int fp = 0; tp + fp <= n; ++fp)
        for (int tn = 0; tp + fp + tn <= n; ++tn) {
          std::vector<oracle::Sample> s;
          s.insert(s.end(), tp, {true, true});
          s.insert(s.end(), fp, {false, true});
          s.insert(s.end(), tn, {false, false});
          s.insert(s.end(), n - tp - fp - tn, {true, false});
          check_against_tally(s);
        }
}

TEST_CASE("metrics equal a per-sample tally on random vectors") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 300)(rng);
    const double pr = std::uniform_real_distribution<double>(0, 1)(rng);
    std::vector<oracle::Sample> s(n);
    for (auto& x : s) x = {std::bernoulli_distribution(pr)(rng), std::bernoulli_distribution(0.5)(rng)};
    check_against_tally(s);
  }
}

TEST_CASE("metric examples") {
  const ConfusionCounts run15{34, 31, 64, 17};
  const auto m = compute_metrics(run15);
  CHECK(m.risky_recall == doctest::Approx(0.667).epsilon(1e-3));
  CHECK(m.safe_recall == doctest::Approx(0.674).epsilon(1e-3));

  const auto perfect = compute_metrics({51, 0, 95, 0});
  for (int i = 0; i < 6; ++i) CHECK(metric_value(perfect, i) == 1.0);

  const auto all_safe = compute_metrics({0, 0, 95, 51});
  CHECK(all_safe.accuracy == doctest::Approx(0.651).epsilon(1e-3));
  CHECK(all_safe.risky_recall == 0.0);
  CHECK(all_safe.risky_precision == 0.0);  // 0/0

  CHECK_THROWS_AS(compute_metrics({0, 0, 0, 0}), EvaluationError);
}

TEST_CASE("threshold selection examples") {
  const std::vector<ScoredSample> s{{0.2, BinaryLabel::kSafe}, {0.6, BinaryLabel::kRisky}, {0.9, BinaryLabel::kRisky}};
  const auto c = select_threshold(s);
  CHECK(c.threshold == doctest::Approx(0.4));
  CHECK(c.macro_f1 == 1.0);

  const std::vector<ScoredSample> flat{{0.5, BinaryLabel::kSafe}, {0.5, BinaryLabel::kRisky}, {0.5, BinaryLabel::kSafe}};
  const auto f = select_threshold(flat);
  CHECK((f.threshold == 0.0 || f.threshold == 1.0));
  const double at0 = compute_metrics(counts_at(flat, 0.0)).macro_f1;
  const double at1 = compute_metrics(counts_at(flat, 1.0)).macro_f1;
  CHECK(f.macro_f1 == std::max(at0, at1));
  if (at0 >= at1) CHECK(f.threshold == 0.0);

  const std::vector<ScoredSample> inverted{{0.9, BinaryLabel::kSafe}, {0.8, BinaryLabel::kSafe}, {0.1, BinaryLabel::kRisky}};
  const auto inv = select_threshold(inverted);
  CHECK(inv.macro_f1 == doctest::Approx(std::max(compute_metrics(counts_at(inverted, 0.0)).macro_f1,
                                                 compute_metrics(counts_at(inverted, 1.0)).macro_f1)));
  CHECK_THROWS_AS(select_threshold(std::vector<ScoredSample>{}), EvaluationError);
}

TEST_CASE("selected macro-F1 is maximal over a full sweep") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 60)(rng);
    std::vector<double> p(n);
    std::vector<bool> risky(n);
    std::vector<ScoredSample> s;
    for (int i = 0; i < n; ++i) {
      // Coarse values so ties in the scores are common.
      p[i] = std::uniform_int_distribution<int>(0, 20)(rng) / 20.0;
      risky[i] = std::bernoulli_distribution(0.35)(rng);
      s.push_back({p[i], risky[i] ? BinaryLabel::kRisky : BinaryLabel::kSafe});
    }
    const auto c = select_threshold(s);
    CHECK(std::fabs(c.macro_f1 - oracle::best_macro_f1(p, risky, oracle::full_sweep(p))) <= 1e-12);
    CHECK(c.counts == counts_at(s, c.threshold));
    // No smaller candidate reaches the same value.
    for (double t : candidate_thresholds(s))
      if (t < c.threshold) CHECK(compute_metrics(counts_at(s, t)).macro_f1 < c.macro_f1);
  }
}

TEST_CASE("threshold choice is invariant under monotone transforms") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 40)(rng);
    std::vector<ScoredSample> s, cubed;
    for (int i = 0; i < n; ++i) {
      const double p = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
      const auto truth = std::bernoulli_distribution(0.4)(rng) ? BinaryLabel::kRisky : BinaryLabel::kSafe;
      s.push_back({p, truth});
      cubed.push_back({p * p * p, truth});
    }
    const auto a = select_threshold(s), b = select_threshold(cubed);
    CHECK(a.counts == b.counts);
    CHECK(a.macro_f1 == b.macro_f1);
    // The transformed threshold predicts the same labels on the transformed scores.
    CHECK(counts_at(cubed, a.threshold * a.threshold * a.threshold) == a.counts);
  }
}

TEST_CASE("normalized confusion matrices") {
  const auto run15 = normalize_confusion({34, 31, 64, 17});
  CHECK(round1(run15[0][0]) == 66.7);
  CHECK(round1(run15[0][1]) == 33.3);
  // 95 safe clips cannot give exactly 67.0; the nearest count is 64/95.
  CHECK(std::fabs(run15[1][0] - 33.0) < 0.5);
  CHECK(std::fabs(run15[1][1] - 67.0) < 0.5);

  const auto c3d = normalize_confusion({7, 3, 10, 5});
  CHECK(round1(c3d[0][0]) == 58.3);
  CHECK(round1(c3d[0][1]) == 41.7);
  CHECK(round1(c3d[1][0]) == 23.1);
  CHECK(round1(c3d[1][1]) == 76.9);

  const auto perfect = normalize_confusion({5, 0, 9, 0});
  CHECK(perfect[0][0] == 100.0);
  CHECK(perfect[0][1] == 0.0);
  CHECK(perfect[1][1] == 100.0);

  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> u(0, 500);
  for (int i = 0; i < 1000; ++i) {
    ConfusionCounts c{u(rng), u(rng), u(rng), u(rng)};
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0) continue;
    const auto m = normalize_confusion(c);
    CHECK(std::fabs(m[0][0] + m[0][1] - 100.0) <= 1e-9);
    CHECK(std::fabs(m[1][0] + m[1][1] - 100.0) <= 1e-9);
  }
  CHECK_THROWS_AS(normalize_confusion({0, 3, 4, 0}), EvaluationError);
}

TEST_CASE("per-sample step sizes") {
  CHECK(round1(per_sample_step(13)) == 7.7);
  CHECK(round1(per_sample_step(51)) == 2.0);
  CHECK(std::round(per_sample_step(146) * 100) / 100 == 0.68);
  CHECK(per_sample_step(13) / per_sample_step(51) == doctest::Approx(3.92).epsilon(0.01));
  CHECK_THROWS_AS(per_sample_step(0), EvaluationError);
}

TEST_CASE("aggregation uses population SD") {
  auto report = [](const std::string& run, int fold, ConfusionCounts c) {
    FoldReport r;
    r.run_id = run;
    r.fold = fold;
    r.counts = c;
    r.metrics = compute_metrics(c);
    return r;
  };
  std::vector<FoldReport> rs{report("A", 0, {3, 0, 5, 2}), report("A", 1, {7, 0, 5, 3})};
  for (int f = 0; f < 5; ++f) rs.push_back(report("B", f, {34, 31, 64, 17}));
  const auto agg = aggregate(rs);
  REQUIRE(agg.size() == 2);
  CHECK(agg.at("A").folds == 2);
  CHECK(agg.at("A").mean[2] == doctest::Approx(0.65));
  CHECK(agg.at("A").sd[2] == doctest::Approx(0.05));
  CHECK(agg.at("B").mean[2] == doctest::Approx(2.0 / 3.0));
  CHECK(agg.at("B").sd[2] == doctest::Approx(0.0));
}

TEST_CASE("best run matches a brute-force scan") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, MetricSummary> summaries;
    std::vector<std::string> runs;
    for (int r = 0; r < 20; ++r) {
      const std::string id = "R" + std::to_string(r);
      runs.push_back(id);
      MetricSummary s;
      // Few distinct values to force ties on both keys.
      s.mean[2] = std::uniform_int_distribution<int>(0, 3)(rng) / 4.0;
      s.mean[3] = std::uniform_int_distribution<int>(0, 2)(rng) / 3.0;
      summaries[id] = s;
    }
    std::shuffle(runs.begin(), runs.end(), rng);
    std::size_t want = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
      const auto& a = summaries[runs[i]];
      const auto& b = summaries[runs[want]];
      if (std::pair{a.mean[2], a.mean[3]} > std::pair{b.mean[2], b.mean[3]}) want = i;
    }
    CHECK(best_run(summaries, runs) == runs[want]);
  }
}

TEST_CASE("fold report json round trip") {
  FoldReport r;
  r.run_id = "R15";
  r.fold = 3;
  r.threshold = 0.375;
  r.counts = {34, 31, 64, 17};
  r.metrics = compute_metrics(r.counts);
  const auto back = fold_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.run_id == "R15");
  CHECK(back.fold == 3);
  CHECK(back.threshold == 0.375);
  CHECK(back.counts == r.counts);
  CHECK(back.metrics.macro_f1 == r.metrics.macro_f1);
}
