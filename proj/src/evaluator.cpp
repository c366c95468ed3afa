#include "tackle/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "tackle/error.hpp"

namespace tackle {

namespace {

double ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

}  // namespace

double metric_value(const Metrics& m, int index) {
  switch (index) {
    case 0: return m.accuracy;
    case 1: return m.risky_precision;
    case 2: return m.risky_recall;
    case 3: return m.risky_f1;
    case 4: return m.safe_recall;
    case 5: return m.macro_f1;
  }
  throw InvariantError("metric index out of range");
}

Metrics compute_metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0) throw EvaluationError("negative confusion count");
  if (c.total() == 0) throw EvaluationError("no samples to evaluate");
  Metrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.risky_precision = ratio(c.tp, c.tp + c.fp);
  m.risky_recall = ratio(c.tp, c.tp + c.fn);
  m.risky_f1 = ratio(2.0 * c.tp, 2.0 * c.tp + c.fp + c.fn);
  m.safe_recall = ratio(c.tn, c.tn + c.fp);
  const double safe_f1 = ratio(2.0 * c.tn, 2.0 * c.tn + c.fn + c.fp);
  m.macro_f1 = 0.5 * (m.risky_f1 + safe_f1);
  return m;
}

ConfusionCounts counts_at(std::span<const ScoredSample> scores, double threshold) {
  ConfusionCounts c;
  for (const auto& s : scores) {
    const bool predicted_risky = s.risky_probability >= threshold;
    const bool risky = s.truth == BinaryLabel::kRisky;
    if (predicted_risky && risky) ++c.tp;
    else if (predicted_risky) ++c.fp;
    else if (risky) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::vector<double> candidate_thresholds(std::span<const ScoredSample> scores) {
  std::vector<double> p;
  p.reserve(scores.size());
  for (const auto& s : scores) p.push_back(s.risky_probability);
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::vector<double> out{0.0};
  for (std::size_t i = 0; i + 1 < p.size(); ++i) out.push_back(0.5 * (p[i] + p[i + 1]));
  out.push_back(1.0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ThresholdChoice select_threshold(std::span<const ScoredSample> scores) {
  if (scores.empty()) throw EvaluationError("no scores for threshold selection");
  ThresholdChoice best;
  bool have = false;
  for (double t : candidate_thresholds(scores)) {
    const auto c = counts_at(scores, t);
    const double f1 = compute_metrics(c).macro_f1;
    if (!have || f1 > best.macro_f1) {
      best = {t, c, f1};
      have = true;
    }
  }
  return best;
}

std::map<std::string, MetricSummary> aggregate(std::span<const FoldReport> reports) {
  std::map<std::string, std::vector<const FoldReport*>> by_run;
  for (const auto& r : reports) by_run[r.run_id].push_back(&r);
  std::map<std::string, MetricSummary> out;
  for (const auto& [run, rs] : by_run) {
    MetricSummary s;
    s.folds = static_cast<int>(rs.size());
    for (int m = 0; m < 6; ++m) {
      double sum = 0;
      for (const auto* r : rs) sum += metric_value(r->metrics, m);
      const double mean = sum / rs.size();
      double sq = 0;
      for (const auto* r : rs) sq += (metric_value(r->metrics, m) - mean) * (metric_value(r->metrics, m) - mean);
      s.mean[m] = mean;
      s.sd[m] = std::sqrt(sq / rs.size());
    }
    out.emplace(run, s);
  }
  return out;
}

std::string best_run(const std::map<std::string, MetricSummary>& summaries, std::span<const std::string> runs) {
  std::string best;
  double best_recall = -1, best_f1 = -1;
  for (const auto& run : runs) {
    const auto it = summaries.find(run);
    if (it == summaries.end()) continue;
    const double recall = it->second.mean[2], f1 = it->second.mean[3];
    if (recall > best_recall || (recall == best_recall && f1 > best_f1)) {
      best = run;
      best_recall = recall;
      best_f1 = f1;
    }
  }
  return best;
}

NormalizedConfusion normalize_confusion(const ConfusionCounts& c) {
  const int risky = c.tp + c.fn, safe = c.tn + c.fp;
  if (risky == 0 || safe == 0) throw EvaluationError("cannot normalize confusion with an empty class");
  NormalizedConfusion m{};
  m[0][0] = 100.0 * c.tp / risky;
  m[0][1] = 100.0 * c.fn / risky;
  m[1][0] = 100.0 * c.fp / safe;
  m[1][1] = 100.0 * c.tn / safe;
  return m;
}

double per_sample_step(int count) {
  if (count <= 0) throw EvaluationError("per-sample step needs a positive count");
  return 100.0 / count;
}

nlohmann::ordered_json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  for (int i = 0; i < 6; ++i) j[kMetricNames[i]] = metric_value(m, i);
  return j;
}

nlohmann::ordered_json to_json(const FoldReport& r) {
  return {{"run_id", r.run_id},
          {"fold", r.fold},
          {"threshold", r.threshold},
          {"counts", to_json(r.counts)},
          {"metrics", to_json(r.metrics)}};
}

FoldReport fold_report_from_json(const nlohmann::json& j) {
  try {
    FoldReport r;
    r.run_id = j.at("run_id").get<std::string>();
    r.fold = j.at("fold").get<int>();
    r.threshold = j.at("threshold").get<double>();
    const auto& c = j.at("counts");
    r.counts = {c.at("tp").get<int>(), c.at("fp").get<int>(), c.at("tn").get<int>(), c.at("fn").get<int>()};
    r.metrics = compute_metrics(r.counts);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed fold report: ") + e.what());
  }
}

}  // namespace tackle
