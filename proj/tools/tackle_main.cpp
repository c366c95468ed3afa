// tackle: command-line driver for the tackle-risk classification pipeline.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tackle/augmentor.hpp"
#include "tackle/checkpoint.hpp"
#include "tackle/clipstore.hpp"
#include "tackle/designer.hpp"
#include "tackle/error.hpp"
#include "tackle/evaluator.hpp"
#include "tackle/kernels.hpp"
#include "tackle/partitioner.hpp"
#include "tackle/pipeline.hpp"
#include "tackle/synthgen.hpp"
#include "tackle/trainer.hpp"

namespace fs = std::filesystem;
using namespace tackle;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// --config for train: an experiment config, of which only the model/train/loss/augment parts matter.
GridConfig grid_from(const std::string& config_path) {
  GridConfig g;
  if (!config_path.empty()) {
    const auto j = read_json(config_path);
    if (j.contains("model")) g.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) g.train = train_config_from_json(j.at("train"));
    if (j.contains("loss")) g.loss = loss_config_from_json(j.at("loss"));
    if (j.contains("augment")) g.augment = augment_params_from_json(j.at("augment"));
  }
  if (const auto s = seed_override()) {
    g.train.seed = *s;
    g.augment.seed = *s;
  }
  return g;
}

struct FoldsFile {
  FoldAssignment folds;
  std::string manifest;
};

FoldsFile read_folds(const fs::path& path) {
  const auto j = read_json(path);
  FoldsFile f{folds_from_json(j), ""};
  if (j.contains("manifest")) {
    fs::path m = j.at("manifest").get<std::string>();
    if (m.is_relative()) m = path.parent_path() / m;
    f.manifest = m.string();
  }
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tackle-risk video classification: design, data, training and evaluation."};
  app.require_subcommand(1);
  std::string kernels = "auto";
  app.add_option("--kernels", kernels, "Kernel set: auto, scalar, avx2")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  // design
  auto* design = app.add_subcommand("design", "Emit the 20-run grid (JSON) and the L18 table (CSV)");
  std::string design_out;
  design->add_option("--out", design_out, "Output directory (stdout when omitted)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic clip set");
  SynthConfig scfg;
  std::string synth_out;
  int synth_jobs = 1;
  synth->add_option("--count", scfg.count, "Number of clips")->capture_default_str();
  synth->add_option("--fraction", scfg.risky_fraction, "Risky fraction")->capture_default_str();
  synth->add_option("--seed", scfg.seed, "Seed")->capture_default_str();
  synth->add_option("--min-frames", scfg.min_frames)->capture_default_str();
  synth->add_option("--max-frames", scfg.max_frames)->capture_default_str();
  synth->add_option("--height", scfg.height)->capture_default_str();
  synth->add_option("--width", scfg.width)->capture_default_str();
  synth->add_option("--blob-radius", scfg.blob_radius)->capture_default_str();
  synth->add_option("--noise", scfg.background_noise, "Sensor noise sigma")->capture_default_str();
  synth->add_option("--jobs", synth_jobs)->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // localize
  auto* localize = app.add_subcommand("localize", "Trim every clip to the 32-frame window around its FPOC");
  std::string loc_manifest, loc_out;
  localize->add_option("--manifest", loc_manifest)->required();
  localize->add_option("--out", loc_out)->required();

  // augment
  auto* augment = app.add_subcommand("augment", "Apply one augmentation configuration to a clip");
  std::string aug_levels, aug_in, aug_out;
  AugmentParams aparams;
  augment->add_option("--levels", aug_levels, "NOISE,BRIGHT,ROT,FLIP")->required();
  augment->add_option("--sigma", aparams.noise_sigma)->capture_default_str();
  augment->add_option("--seed", aparams.seed)->capture_default_str();
  augment->add_option("--in", aug_in)->required();
  augment->add_option("--out", aug_out)->required();

  // split
  auto* split = app.add_subcommand("split", "Stratified k-fold assignment");
  std::string split_manifest, split_out;
  int split_k = 5;
  std::uint64_t split_seed = 42;
  split->add_option("--manifest", split_manifest)->required();
  split->add_option("--k", split_k)->capture_default_str();
  split->add_option("--seed", split_seed)->capture_default_str();
  split->add_option("--out", split_out)->required();

  // materialize
  auto* materialize = app.add_subcommand("materialize", "Write training/validation sub-manifests and augmented clips");
  std::string mat_folds, mat_run, mat_out, mat_manifest, mat_config;
  std::vector<int> mat_fold_list;
  materialize->add_option("--folds", mat_folds)->required();
  materialize->add_option("--run", mat_run)->required();
  materialize->add_option("--fold", mat_fold_list, "Fold indices (all when omitted)");
  materialize->add_option("--manifest", mat_manifest, "Overrides the manifest recorded in the folds file");
  materialize->add_option("--config", mat_config);
  materialize->add_option("--out", mat_out)->required();

  // train
  auto* train = app.add_subcommand("train", "Train and evaluate one (run, fold) trial");
  std::string tr_folds, tr_run, tr_config, tr_out, tr_manifest, tr_ckpt;
  int tr_fold = 0;
  train->add_option("--folds", tr_folds)->required();
  train->add_option("--run", tr_run)->required();
  train->add_option("--fold", tr_fold)->required();
  train->add_option("--config", tr_config);
  train->add_option("--manifest", tr_manifest);
  train->add_option("--checkpoint", tr_ckpt, "Save the selected parameters");
  train->add_option("--out", tr_out)->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Aggregate fold reports into per-run mean/SD");
  std::vector<std::string> ev_reports;
  std::string ev_out;
  evaluate->add_option("reports", ev_reports, "Fold report JSON files")->required();
  evaluate->add_option("--out", ev_out);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run the full pipeline from a config file");
  std::string ex_config, ex_out, ex_runs;
  bool ex_all = false;
  int ex_jobs = 0;
  experiment->add_option("--config", ex_config)->required();
  experiment->add_flag("--all", ex_all, "All 20 runs, ignoring the config's run filter");
  experiment->add_option("--runs", ex_runs, "Comma-separated run ids");
  experiment->add_option("--jobs", ex_jobs);
  experiment->add_option("--out", ex_out, "Output directory (overrides config)");

  // report
  auto* report = app.add_subcommand("report", "Heatmap CSV, confusion JSON and SVG from consolidated results");
  std::string rp_results, rp_out;
  bool rp_svg = false;
  report->add_option("--results", rp_results)->required();
  report->add_option("--out", rp_out)->required();
  report->add_flag("--svg", rp_svg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (kernels == "scalar") kernels::select(kernels::Isa::kScalar);
    if (kernels == "avx2") {
      if (!kernels::cpu_has_avx2()) throw ConfigError("AVX2 kernels unavailable on this CPU");
      kernels::select(kernels::Isa::kAvx2);
    }

    if (*design) {
      const auto plans = enumerate_runs();
      const std::string runs = runs_json(plans);
      const std::string csv = l18_csv(build_l18());
      if (design_out.empty()) {
        std::cout << runs << csv;
      } else {
        write_file(fs::path(design_out) / "runs.json", runs);
        write_file(fs::path(design_out) / "l18.csv", csv);
      }
    } else if (*synth) {
      if (const auto s = seed_override()) scfg.seed = *s;
      scfg.validate();
      const auto m = generate(scfg, synth_out, synth_jobs);
      std::cout << "wrote " << m.entries.size() << " clips (" << m.class_counts.risky << " risky, "
                << m.class_counts.safe << " safe) to " << synth_out << "\n";
    } else if (*localize) {
      const auto m = localize_dataset(load_manifest(loc_manifest), loc_out);
      std::cout << "localized " << m.entries.size() << " clips to " << loc_out << "\n";
    } else if (*augment) {
      if (const auto s = seed_override()) aparams.seed = *s;
      aparams.validate();
      write_clip(aug_out, apply_config(read_clip(aug_in), parse_levels(aug_levels), aparams));
    } else if (*split) {
      if (const auto s = seed_override()) split_seed = *s;
      const auto m = load_manifest(split_manifest);
      auto j = folds_to_json(stratified_kfold(m, split_k, split_seed));
      j["manifest"] = fs::absolute(split_manifest).generic_string();
      write_file(split_out, j.dump(2) + "\n");
    } else if (*materialize) {
      const auto ff = read_folds(mat_folds);
      const std::string mpath = mat_manifest.empty() ? ff.manifest : mat_manifest;
      if (mpath.empty()) throw ConfigError("no manifest: pass --manifest or record one in the folds file");
      const auto manifest = load_manifest(mpath);
      const auto clips = load_localized(manifest);
      const auto plan = plan_for(RunId::parse(mat_run));
      const auto g = grid_from(mat_config);
      if (mat_fold_list.empty())
        for (int f = 0; f < ff.folds.fold_count; ++f) mat_fold_list.push_back(f);
      for (int f : mat_fold_list) {
        if (f < 0 || f >= ff.folds.fold_count) throw ConfigError("fold out of range: " + std::to_string(f));
        const auto out = materialize_fold(manifest, clips, ff.folds, plan, f, g.augment,
                                          fs::path(mat_out) / plan.run_id.str() / ("fold" + std::to_string(f)));
        std::cout << plan.run_id.str() << " fold " << f << ": " << out.training.entries.size() << " training ("
                  << out.training.class_counts.safe << " safe, " << out.training.class_counts.risky << " risky), "
                  << out.validation.entries.size() << " validation\n";
      }
    } else if (*train) {
      const auto ff = read_folds(tr_folds);
      const std::string mpath = tr_manifest.empty() ? ff.manifest : tr_manifest;
      if (mpath.empty()) throw ConfigError("no manifest: pass --manifest or record one in the folds file");
      if (tr_fold < 0 || tr_fold >= ff.folds.fold_count) throw ConfigError("fold out of range");
      const auto manifest = load_manifest(mpath);
      const auto clips = load_localized(manifest);
      const auto g = grid_from(tr_config);
      ModelParameters<float> best;
      const auto out = run_trial(manifest, clips, ff.folds, plan_for(RunId::parse(tr_run)), tr_fold, g, &best);
      auto j = to_json(*out.report);
      j["trial"] = to_json(out, true);
      write_file(tr_out, j.dump(2) + "\n");
      if (!tr_ckpt.empty()) save_checkpoint(tr_ckpt, best);
      const auto& m = out.report->metrics;
      std::cout << out.run_id << " fold " << out.fold << ": risky recall " << m.risky_recall << ", risky F1 "
                << m.risky_f1 << ", macro-F1 " << m.macro_f1 << " (threshold " << out.report->threshold << ")\n";
    } else if (*evaluate) {
      std::vector<FoldReport> reports;
      std::vector<std::string> order;
      for (const auto& p : ev_reports) {
        auto r = fold_report_from_json(read_json(p));
        if (std::find(order.begin(), order.end(), r.run_id) == order.end()) order.push_back(r.run_id);
        reports.push_back(std::move(r));
      }
      std::sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) {
        return RunId::parse(a).ordinal() < RunId::parse(b).ordinal();
      });
      const auto summaries = aggregate(reports);
      nlohmann::ordered_json doc, runs;
      for (const auto& r : order) {
        nlohmann::ordered_json mean, sd;
        for (int i = 0; i < 6; ++i) {
          mean[kMetricNames[i]] = summaries.at(r).mean[i];
          sd[kMetricNames[i]] = summaries.at(r).sd[i];
        }
        runs[r] = {{"folds", summaries.at(r).folds}, {"mean", mean}, {"sd", sd}};
      }
      doc["runs"] = std::move(runs);
      doc["best_run"] = best_run(summaries, order);
      if (ev_out.empty())
        std::cout << doc.dump(2) << "\n";
      else
        write_file(ev_out, doc.dump(2) + "\n");
    } else if (*experiment) {
      auto cfg = load_experiment_config(ex_config);
      if (ex_all) cfg.runs.clear();
      if (!ex_runs.empty() && !ex_all) {
        cfg.runs.clear();
        std::stringstream ss(ex_runs);
        for (std::string r; std::getline(ss, r, ',');) cfg.runs.push_back(r);
      }
      if (ex_jobs > 0) cfg.jobs = ex_jobs;
      if (!ex_out.empty()) cfg.output_dir = ex_out;
      const auto res = run_pipeline(cfg, &std::cout);
      std::cout << "results: " << res.results_path.string() << "\n";
      if (!res.results.at("best_run").is_null())
        std::cout << "best run: " << res.results.at("best_run").get<std::string>() << "\n";
    } else if (*report) {
      write_report(read_json(rp_results), rp_out, {.svg = rp_svg});
      std::cout << "report written to " << rp_out << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "tackle: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const Error& e) {
    std::cerr << "tackle: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "tackle: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "tackle: internal error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInternal);
  }
  return 0;
}
