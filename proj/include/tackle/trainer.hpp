#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tackle/augmentor.hpp"
#include "tackle/clipstore.hpp"
#include "tackle/designer.hpp"
#include "tackle/error.hpp"
#include "tackle/evaluator.hpp"
#include "tackle/focal_loss.hpp"
#include "tackle/partitioner.hpp"
#include "tackle/vivit.hpp"

namespace tackle {

struct TrainConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 8;
  int max_epochs = 50;
  int patience = 5;  // epochs without validation macro-F1 improvement
  std::uint64_t seed = 0;

  void validate() const;
};

struct Example {
  std::vector<float> input;  // prepared model input
  int label = 0;             // 1 = risky
};

// Strict-improvement patience counter; epochs are 1-based.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}
  // Returns true when `metric` improves on the best so far.
  bool update(double metric);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  int best_epoch() const noexcept { return best_epoch_; }
  double best() const noexcept { return best_; }
  int epoch() const noexcept { return epoch_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int since_best_ = 0;
  double best_ = -1.0;
};

template <typename Real>
class Adam {
 public:
  Adam(const ModelConfig& config, const TrainConfig& cfg);
  // params -= lr * mhat / (sqrt(vhat) + eps) using grads * grad_scale.
  void step(ModelParameters<Real>& params, const ModelParameters<Real>& grads, double grad_scale);
  int steps() const noexcept { return t_; }

 private:
  TrainConfig cfg_;
  ModelParameters<Real> m_, v_;
  int t_ = 0;
};

// Summed focal loss over `batch` and summed gradients accumulated into `grads`.
template <typename Real>
double accumulate_batch(const ModelParameters<Real>& params, std::span<const Example* const> batch,
                        const FocalLossConfig& loss, ModelParameters<Real>& grads);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;     // mean per-sample focal loss
  double val_macro_f1 = 0;   // at threshold 0.5
  bool improved = false;
};

struct TrainResult {
  ModelParameters<float> best;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  int epochs_run = 0;
  double initial_loss = 0;  // mean training loss before the first update
};

// Throws DivergenceError on a non-finite loss.
TrainResult train_fold(std::span<const Example> train, std::span<const Example> validation,
                       const ModelConfig& model, const TrainConfig& train_cfg, const FocalLossConfig& loss_cfg);

std::vector<double> predict_risky(const ModelParameters<float>& params, std::span<const Example> examples);
double mean_loss(const ModelParameters<float>& params, std::span<const Example> examples,
                 const FocalLossConfig& loss_cfg);

// Clips by source_id, loaded once and read concurrently afterwards.
class ClipCache {
 public:
  ClipCache() = default;
  static ClipCache load(const DatasetManifest& manifest);
  void insert(std::string source_id, Clip clip) { clips_.insert_or_assign(std::move(source_id), std::move(clip)); }
  const Clip& at(const std::string& source_id) const;
  std::size_t size() const noexcept { return clips_.size(); }

 private:
  std::map<std::string, Clip> clips_;
};

struct GridConfig {
  ModelConfig model;
  TrainConfig train;
  FocalLossConfig loss;
  AugmentParams augment;
  int jobs = 1;
};

struct TrialOutcome {
  std::string run_id;
  int fold = 0;
  std::optional<FoldReport> report;
  std::optional<std::string> error;
  ExitCode error_code = ExitCode::kOk;
  std::size_t training_size = 0;
  std::size_t validation_size = 0;
  std::size_t synthesized = 0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<EpochLog> log;
  std::vector<ScoredSample> validation_scores;
};

std::uint64_t trial_seed(std::uint64_t seed, const RunId& run, int fold);

// Builds, trains and evaluates one (run, fold) trial. The trained parameters are
// returned through `best` when non-null.
TrialOutcome run_trial(const DatasetManifest& manifest, const ClipCache& clips, const FoldAssignment& folds,
                       const RunPlan& plan, int fold, const GridConfig& cfg, ModelParameters<float>* best = nullptr);

// One outcome per (run, fold), ordered by run then fold. Trial failures are
// recorded in the outcome instead of aborting the grid.
std::vector<TrialOutcome> run_grid(const DatasetManifest& manifest, const ClipCache& clips,
                                   const FoldAssignment& folds, std::span<const RunPlan> runs,
                                   const GridConfig& cfg);

nlohmann::ordered_json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});
nlohmann::ordered_json to_json(const FocalLossConfig& c);
FocalLossConfig loss_config_from_json(const nlohmann::json& j, FocalLossConfig defaults = {});
nlohmann::ordered_json to_json(const AugmentParams& p);
AugmentParams augment_params_from_json(const nlohmann::json& j, AugmentParams defaults = {});
nlohmann::ordered_json to_json(const TrialOutcome& t, bool include_scores = false);

}  // namespace tackle
