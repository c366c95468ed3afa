#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tackle/clipstore.hpp"

namespace tackle {

// Positive class is Risky.
struct ConfusionCounts {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  int total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
  double accuracy = 0;
  double risky_precision = 0;
  double risky_recall = 0;
  double risky_f1 = 0;
  double safe_recall = 0;
  double macro_f1 = 0;
};

inline constexpr std::array<const char*, 6> kMetricNames{"accuracy", "risky_precision", "risky_recall",
                                                         "risky_f1",  "safe_recall",     "macro_f1"};

double metric_value(const Metrics& m, int index);

// 0/0 ratios are 0. Throws EvaluationError when there are no samples.
Metrics compute_metrics(const ConfusionCounts& counts);

struct ScoredSample {
  double risky_probability = 0;
  BinaryLabel truth = BinaryLabel::kSafe;
};

// Predict risky iff probability >= threshold.
ConfusionCounts counts_at(std::span<const ScoredSample> scores, double threshold);

struct ThresholdChoice {
  double threshold = 0.5;
  ConfusionCounts counts;
  double macro_f1 = 0;
};

// Candidates {0, 1} plus midpoints of consecutive distinct probabilities; the
// macro-F1 maximizer wins, ties go to the smallest threshold.
ThresholdChoice select_threshold(std::span<const ScoredSample> scores);
std::vector<double> candidate_thresholds(std::span<const ScoredSample> scores);

struct FoldReport {
  std::string run_id;
  int fold = 0;
  double threshold = 0.5;
  ConfusionCounts counts;
  Metrics metrics;
};

struct MetricSummary {
  std::array<double, 6> mean{};
  std::array<double, 6> sd{};  // population SD over folds
  int folds = 0;
};

// Keyed by run id.
std::map<std::string, MetricSummary> aggregate(std::span<const FoldReport> reports);

// Highest risky recall, ties broken by risky F1, then by the order of `runs`.
std::string best_run(const std::map<std::string, MetricSummary>& summaries, std::span<const std::string> runs);

// rows: [Risky, Safe]; columns: [predicted Risky, predicted Safe]; percentages.
using NormalizedConfusion = std::array<std::array<double, 2>, 2>;
NormalizedConfusion normalize_confusion(const ConfusionCounts& counts);

// Percentage points moved by a single flipped sample out of `count`.
double per_sample_step(int count);

nlohmann::ordered_json to_json(const ConfusionCounts& c);
nlohmann::ordered_json to_json(const Metrics& m);
nlohmann::ordered_json to_json(const FoldReport& r);
FoldReport fold_report_from_json(const nlohmann::json& j);

}  // namespace tackle
