#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tackle/designer.hpp"
#include "tackle/evaluator.hpp"
#include "tackle/synthgen.hpp"
#include "tackle/trainer.hpp"

namespace tackle {

inline constexpr const char* kToolName = "tackle";
inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
  std::optional<std::filesystem::path> manifest;  // input data, or
  std::optional<SynthConfig> synth;                // generated data
  std::filesystem::path output_dir = "tackle_out";
  int folds = 5;
  std::uint64_t split_seed = 42;
  ModelConfig model;
  TrainConfig train;
  FocalLossConfig loss;
  AugmentParams augment;
  std::vector<std::string> runs;  // empty: all 20
  int jobs = 1;

  void validate() const;
  std::vector<RunPlan> selected_runs() const;
};

// Fields affecting results only; output_dir and jobs are excluded.
nlohmann::ordered_json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// fnv1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

// TACKLE_SEED, when set, replaces every seed in the config.
std::optional<std::uint64_t> seed_override();
void apply_seed_override(ExperimentConfig& c);

// Carries the stage and trial that failed.
class StageError : public Error {
 public:
  StageError(ExitCode code, std::string stage, std::string trial, const std::string& cause)
      : Error(code, "stage " + stage + (trial.empty() ? "" : " [" + trial + "]") + ": " + cause),
        stage_(std::move(stage)),
        trial_(std::move(trial)) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& trial() const noexcept { return trial_; }

 private:
  std::string stage_, trial_;
};

// Localizes every clip to the analysis window, keyed by source_id.
ClipCache load_localized(const DatasetManifest& manifest);

// Writes localized clips to DIR/clips and DIR/manifest.json (FPOC at the window position).
DatasetManifest localize_dataset(const DatasetManifest& manifest, const std::filesystem::path& out_dir);

struct MaterializedFold {
  DatasetManifest training;
  DatasetManifest validation;
};

// Training sub-manifest (originals, replacements and synthesized clips written
// under DIR/clips) and the validation sub-manifest for one fold.
MaterializedFold materialize_fold(const DatasetManifest& manifest, const ClipCache& clips,
                                  const FoldAssignment& folds, const RunPlan& plan, int fold,
                                  const AugmentParams& params, const std::filesystem::path& out_dir);

struct PipelineResult {
  std::filesystem::path stage_dir;  // output_dir / config hash
  std::filesystem::path results_path;
  nlohmann::ordered_json results;
};

PipelineResult run_pipeline(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Consolidated document from finished trials; no timings or paths, so identical
// configs give identical bytes.
nlohmann::ordered_json consolidate(const ExperimentConfig& cfg, std::span<const TrialOutcome> trials);

struct ReportOptions {
  bool svg = false;
};

// metrics.csv (metrics x runs means), metrics_sd.csv, confusion.json and
// optionally heatmap.svg.
void write_report(const nlohmann::json& results, const std::filesystem::path& out_dir, const ReportOptions& opts);

std::string metrics_csv(const nlohmann::json& results, bool sd = false);
nlohmann::ordered_json confusion_json(const nlohmann::json& results);
std::string heatmap_svg(const nlohmann::json& results);

}  // namespace tackle
