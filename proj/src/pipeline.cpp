#include "tackle/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "tackle/error.hpp"
#include "tackle/partitioner.hpp"
#include "tackle/rng.hpp"

namespace fs = std::filesystem;

namespace tackle {

namespace {

nlohmann::ordered_json synth_to_json(const SynthConfig& s) {
  return {{"count", s.count},
          {"risky_fraction", s.risky_fraction},
          {"min_frames", s.min_frames},
          {"max_frames", s.max_frames},
          {"height", s.height},
          {"width", s.width},
          {"background_noise", s.background_noise},
          {"blob_radius", s.blob_radius},
          {"illumination_min", s.illumination_min},
          {"illumination_max", s.illumination_max},
          {"seed", s.seed}};
}

SynthConfig synth_from_json(const nlohmann::json& j) {
  SynthConfig s;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("count", s.count);
  get("risky_fraction", s.risky_fraction);
  get("min_frames", s.min_frames);
  get("max_frames", s.max_frames);
  get("height", s.height);
  get("width", s.width);
  get("background_noise", s.background_noise);
  get("blob_radius", s.blob_radius);
  get("illumination_min", s.illumination_min);
  get("illumination_max", s.illumination_max);
  get("seed", s.seed);
  s.validate();
  return s;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_stem(const std::string& id) {
  std::string out = id;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '+')) c = '_';
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ManifestError("cannot write " + path.string());
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

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(e.code(), name, "", e.what());
  } catch (const std::exception& e) {
    throw StageError(ExitCode::kInternal, name, "", e.what());
  }
}

ManifestEntry entry_for(const ManifestEntry& like, std::string id, const fs::path& dir, const std::string& rel,
                        int fpoc) {
  ManifestEntry e = like;
  e.source_id = std::move(id);
  e.stored_path = rel;
  e.path = dir / rel;
  e.fpoc.fpoc_index = fpoc;
  return e;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (manifest.has_value() == synth.has_value()) throw ConfigError("exactly one of manifest or synth must be given");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  model.validate();
  train.validate();
  loss.validate();
  augment.validate();
  if (synth) synth->validate();
  (void)selected_runs();
}

std::vector<RunPlan> ExperimentConfig::selected_runs() const {
  if (runs.empty()) return enumerate_runs();
  std::set<int> seen;
  std::vector<RunPlan> plans;
  for (const auto& r : runs) {
    RunId id = RunId::parse(r);
    if (seen.insert(id.ordinal()).second) plans.push_back(plan_for(id));
  }
  std::sort(plans.begin(), plans.end(),
            [](const RunPlan& a, const RunPlan& b) { return a.run_id.ordinal() < b.run_id.ordinal(); });
  return plans;
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  if (c.manifest) j["manifest"] = c.manifest->generic_string();
  if (c.synth) j["synth"] = synth_to_json(*c.synth);
  j["folds"] = c.folds;
  j["split_seed"] = c.split_seed;
  j["model"] = to_json(c.model);
  j["train"] = to_json(c.train);
  j["loss"] = to_json(c.loss);
  j["augment"] = to_json(c.augment);
  auto runs = nlohmann::ordered_json::array();
  for (const auto& p : c.selected_runs()) runs.push_back(p.run_id.str());
  j["runs"] = std::move(runs);
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    if (j.contains("manifest")) c.manifest = j.at("manifest").get<std::string>();
    if (j.contains("synth")) c.synth = synth_from_json(j.at("synth"));
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("folds")) c.folds = j.at("folds").get<int>();
    if (j.contains("split_seed")) c.split_seed = j.at("split_seed").get<std::uint64_t>();
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("loss")) c.loss = loss_config_from_json(j.at("loss"));
    if (j.contains("augment")) c.augment = augment_params_from_json(j.at("augment"));
    if (j.contains("runs")) c.runs = j.at("runs").get<std::vector<std::string>>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  ExperimentConfig c = experiment_config_from_json(read_json(path));
  if (c.manifest && c.manifest->is_relative()) c.manifest = path.parent_path() / *c.manifest;
  return c;
}

std::string config_hash(const ExperimentConfig& c) { return hex16(fnv1a(to_json(c).dump())); }

std::optional<std::uint64_t> seed_override() {
  const char* v = std::getenv("TACKLE_SEED");
  if (!v || !*v) return std::nullopt;
  std::uint64_t seed = 0;
  const char* end = v + std::char_traits<char>::length(v);
  auto [p, ec] = std::from_chars(v, end, seed);
  if (ec != std::errc() || p != end) throw ConfigError(std::string("TACKLE_SEED is not an unsigned integer: ") + v);
  return seed;
}

void apply_seed_override(ExperimentConfig& c) {
  const auto seed = seed_override();
  if (!seed) return;
  c.split_seed = *seed;
  c.train.seed = *seed;
  c.augment.seed = *seed;
  if (c.synth) c.synth->seed = *seed;
}

ClipCache load_localized(const DatasetManifest& manifest) {
  ClipCache cache;
  for (const auto& e : manifest.entries) cache.insert(e.source_id, localize_clip(read_clip(e.path), e.fpoc));
  return cache;
}

DatasetManifest localize_dataset(const DatasetManifest& manifest, const fs::path& out_dir) {
  fs::create_directories(out_dir / "clips");
  DatasetManifest out;
  for (const auto& e : manifest.entries) {
    const std::string rel = "clips/" + file_stem(e.source_id) + ".tckl";
    write_clip(out_dir / rel, localize_clip(read_clip(e.path), e.fpoc));
    out.entries.push_back(entry_for(e, e.source_id, out_dir, rel, kWindowBefore));
  }
  out.recount();
  save_manifest(out_dir / "manifest.json", out);
  return out;
}

MaterializedFold materialize_fold(const DatasetManifest& manifest, const ClipCache& clips,
                                  const FoldAssignment& folds, const RunPlan& plan, int fold,
                                  const AugmentParams& params, const fs::path& out_dir) {
  const TrainingSet set = balance_training(fold, folds, manifest, plan, params);
  const TrainingSet sets[] = {set};
  const auto leak = check_leakage(folds, sets);
  if (!leak.pass) throw InvariantError("leakage check failed: " + leak.violations.front());

  MaterializedFold out;
  bool made_dir = false;
  for (const auto& item : training_items(set, manifest)) {
    const ManifestEntry& parent = manifest.find(item.parent);
    if (!item.levels) {
      ManifestEntry e = parent;
      e.source_id = item.id;
      e.stored_path = fs::absolute(parent.path).generic_string();
      out.training.entries.push_back(std::move(e));
      continue;
    }
    if (!made_dir) fs::create_directories(out_dir / "clips"), made_dir = true;
    const std::string rel = "clips/" + file_stem(item.id) + ".aug.tckl";
    write_clip(out_dir / rel, materialize_item(item, clips.at(item.parent), params));
    out.training.entries.push_back(entry_for(parent, item.id, out_dir, rel, kWindowBefore));
  }
  for (const auto& id : folds.folds.at(fold)) {
    ManifestEntry e = manifest.find(id);
    e.stored_path = fs::absolute(e.path).generic_string();
    out.validation.entries.push_back(std::move(e));
  }
  out.training.recount();
  out.validation.recount();
  fs::create_directories(out_dir);
  save_manifest(out_dir / "training.json", out.training);
  save_manifest(out_dir / "validation.json", out.validation);
  write_text(out_dir / "training_set.json", training_set_to_json(set).dump(2) + "\n");
  return out;
}

nlohmann::ordered_json consolidate(const ExperimentConfig& cfg, std::span<const TrialOutcome> trials) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json prov;
  prov["tool"] = kToolName;
  prov["version"] = kToolVersion;
  prov["config_hash"] = config_hash(cfg);
  prov["seeds"] = {{"split", cfg.split_seed},
                   {"train", cfg.train.seed},
                   {"augment", cfg.augment.seed},
                   {"synth", cfg.synth ? nlohmann::ordered_json(cfg.synth->seed) : nlohmann::ordered_json()}};
  prov["trial_seed"] = "derive_seed(train.seed, fnv1a(run_id), fold)";
  prov["config"] = to_json(cfg);
  doc["provenance"] = std::move(prov);

  std::vector<std::string> run_order;
  for (const auto& p : cfg.selected_runs()) run_order.push_back(p.run_id.str());
  doc["runs"] = run_order;

  auto arr = nlohmann::ordered_json::array();
  std::vector<FoldReport> reports;
  std::map<std::string, ConfusionCounts> pooled;
  for (const auto& t : trials) {
    auto j = to_json(t, true);
    j["seed"] = trial_seed(cfg.train.seed, RunId::parse(t.run_id), t.fold);
    arr.push_back(std::move(j));
    if (t.report) {
      reports.push_back(*t.report);
      auto& c = pooled[t.run_id];
      c.tp += t.report->counts.tp;
      c.fp += t.report->counts.fp;
      c.tn += t.report->counts.tn;
      c.fn += t.report->counts.fn;
    }
  }
  doc["trials"] = std::move(arr);

  const auto summaries = aggregate(reports);
  nlohmann::ordered_json summary;
  for (const auto& run : run_order) {
    const auto it = summaries.find(run);
    if (it == summaries.end()) continue;
    nlohmann::ordered_json s, mean, sd;
    for (int m = 0; m < 6; ++m) {
      mean[kMetricNames[m]] = it->second.mean[m];
      sd[kMetricNames[m]] = it->second.sd[m];
    }
    s["folds"] = it->second.folds;
    s["mean"] = std::move(mean);
    s["sd"] = std::move(sd);
    s["pooled_counts"] = to_json(pooled[run]);
    summary[run] = std::move(s);
  }
  doc["summary"] = std::move(summary);
  doc["best_run"] = summaries.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(best_run(summaries, run_order));
  return doc;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg_in, std::ostream* log) {
  ExperimentConfig cfg = cfg_in;
  apply_seed_override(cfg);
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  auto say = [&](const std::string& msg) {
    if (log) *log << msg << '\n';
  };

  PipelineResult result;
  const std::string hash = config_hash(cfg);
  result.stage_dir = cfg.output_dir / hash;
  const fs::path dir = result.stage_dir;
  fs::create_directories(dir);
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  say("config " + hash + " -> " + dir.string());

  const auto plans = cfg.selected_runs();
  stage("design", [&] {
    fs::create_directories(dir / "design");
    write_text(dir / "design" / "runs.json", runs_json(plans));
    write_text(dir / "design" / "l18.csv", l18_csv(build_l18()));
    return 0;
  });

  DatasetManifest raw = stage("ingest", [&] {
    if (cfg.synth) {
      say("synth: " + std::to_string(cfg.synth->count) + " clips");
      return generate(*cfg.synth, dir / "data", cfg.jobs);
    }
    return load_manifest(*cfg.manifest);
  });

  DatasetManifest manifest = stage("localize", [&] { return localize_dataset(raw, dir / "localized"); });
  say("localized " + std::to_string(manifest.entries.size()) + " clips (" +
      std::to_string(manifest.class_counts.safe) + " safe, " + std::to_string(manifest.class_counts.risky) +
      " risky)");

  const FoldAssignment folds = stage("split", [&] {
    auto f = stratified_kfold(manifest, cfg.folds, cfg.split_seed);
    fs::create_directories(dir / "split");
    write_text(dir / "split" / "folds.json", folds_to_json(f).dump(2) + "\n");
    return f;
  });

  const ClipCache clips = stage("load", [&] { return ClipCache::load(manifest); });

  stage("materialize", [&] {
    for (const auto& plan : plans) {
      for (int f = 0; f < folds.fold_count; ++f) {
        const TrainingSet set = balance_training(f, folds, manifest, plan, cfg.augment);
        const TrainingSet sets[] = {set};
        const auto leak = check_leakage(folds, sets);
        if (!leak.pass)
          throw StageError(ExitCode::kInternal, "materialize", plan.run_id.str() + "/fold" + std::to_string(f),
                           leak.violations.front());
        const fs::path d = dir / "materialized" / plan.run_id.str();
        fs::create_directories(d);
        write_text(d / ("fold" + std::to_string(f) + ".json"), training_set_to_json(set).dump(2) + "\n");
      }
    }
    return 0;
  });

  GridConfig grid;
  grid.model = cfg.model;
  grid.train = cfg.train;
  grid.loss = cfg.loss;
  grid.augment = cfg.augment;
  grid.jobs = cfg.jobs;
  say("train: " + std::to_string(plans.size()) + " runs x " + std::to_string(folds.fold_count) + " folds");
  const auto trials = run_grid(manifest, clips, folds, plans, grid);

  fs::create_directories(dir / "trials");
  for (const auto& t : trials) {
    write_text(dir / "trials" / (t.run_id + "_fold" + std::to_string(t.fold) + ".json"), to_json(t, true).dump(2) + "\n");
    if (t.report)
      say("  " + t.run_id + " fold " + std::to_string(t.fold) + ": recall " +
          std::to_string(t.report->metrics.risky_recall) + ", macro-F1 " +
          std::to_string(t.report->metrics.macro_f1) + ", epochs " + std::to_string(t.epochs_run));
  }

  result.results = consolidate(cfg, trials);
  result.results_path = dir / "results.json";
  write_text(result.results_path, result.results.dump(2) + "\n");

  for (const auto& t : trials)
    if (t.error) throw StageError(t.error_code, "train", t.run_id + "/fold" + std::to_string(t.fold), *t.error);

  stage("report", [&] {
    write_report(result.results, dir / "report", {.svg = true});
    return 0;
  });
  return result;
}

std::string metrics_csv(const nlohmann::json& results, bool sd) {
  const auto runs = results.at("runs").get<std::vector<std::string>>();
  const auto& summary = results.at("summary");
  std::ostringstream out;
  out << "metric";
  for (const auto& r : runs) out << ',' << r;
  out << '\n';
  char buf[32];
  for (const char* m : kMetricNames) {
    out << m;
    for (const auto& r : runs) {
      out << ',';
      if (summary.contains(r)) {
        std::snprintf(buf, sizeof buf, "%.4f", summary.at(r).at(sd ? "sd" : "mean").at(m).get<double>());
        out << buf;
      }
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json confusion_json(const nlohmann::json& results) {
  nlohmann::ordered_json out;
  const auto& summary = results.at("summary");
  for (const auto& r : results.at("runs").get<std::vector<std::string>>()) {
    if (!summary.contains(r)) continue;
    const auto& c = summary.at(r).at("pooled_counts");
    ConfusionCounts counts{c.at("tp").get<int>(), c.at("fp").get<int>(), c.at("tn").get<int>(), c.at("fn").get<int>()};
    const auto n = normalize_confusion(counts);
    out[r] = {{"rows", {"Risky", "Safe"}},
              {"columns", {"pred Risky", "pred Safe"}},
              {"percent", {{n[0][0], n[0][1]}, {n[1][0], n[1][1]}}},
              {"counts", to_json(counts)}};
  }
  return out;
}

std::string heatmap_svg(const nlohmann::json& results) {
  const auto runs = results.at("runs").get<std::vector<std::string>>();
  const auto& summary = results.at("summary");
  const int cw = 64, ch = 28, left = 130, top = 40;
  const int width = left + cw * static_cast<int>(runs.size()) + 20;
  const int height = top + ch * static_cast<int>(kMetricNames.size()) + 20;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t c = 0; c < runs.size(); ++c)
    svg << "<text x=\"" << left + cw * c + cw / 2 << "\" y=\"" << top - 10 << "\" text-anchor=\"middle\">" << runs[c]
        << "</text>\n";
  char buf[64];
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    const int y = top + ch * static_cast<int>(m);
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y + ch / 2 + 4 << "\" text-anchor=\"end\">" << kMetricNames[m]
        << "</text>\n";
    double best = -1;
    for (const auto& r : runs)
      if (summary.contains(r)) best = std::max(best, summary.at(r).at("mean").at(kMetricNames[m]).get<double>());
    for (std::size_t c = 0; c < runs.size(); ++c) {
      if (!summary.contains(runs[c])) continue;
      const double v = summary.at(runs[c]).at("mean").at(kMetricNames[m]).get<double>();
      const int shade = static_cast<int>(std::lround(255 - 180 * std::clamp(v, 0.0, 1.0)));
      const int x = left + cw * static_cast<int>(c);
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\"rgb("
          << shade << ',' << shade << ",255)\"";
      if (v == best) svg << " stroke=\"#d62728\" stroke-width=\"2\"";
      svg << "/>\n";
      std::snprintf(buf, sizeof buf, "%.3f", v);
      svg << "<text x=\"" << x + cw / 2 << "\" y=\"" << y + ch / 2 + 4 << "\" text-anchor=\"middle\">" << buf
          << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_report(const nlohmann::json& results, const fs::path& out_dir, const ReportOptions& opts) {
  fs::create_directories(out_dir);
  write_text(out_dir / "metrics.csv", metrics_csv(results));
  write_text(out_dir / "metrics_sd.csv", metrics_csv(results, true));
  write_text(out_dir / "confusion.json", confusion_json(results).dump(2) + "\n");
  if (opts.svg) write_text(out_dir / "heatmap.svg", heatmap_svg(results));
}

}  // namespace tackle
