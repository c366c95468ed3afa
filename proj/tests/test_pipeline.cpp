#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "tackle/error.hpp"
#include "tackle/pipeline.hpp"

using namespace tackle;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("tackle_pipeline_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TACKLE_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json tiny_config_json() {
  return {
      {"synth", {{"count", 20}, {"seed", 3}, {"min_frames", 40}, {"max_frames", 50}}},
      {"folds", 2},
      {"model", {{"frames", 2}, {"height", 8}, {"width", 8}, {"patch", 4}, {"hidden", 8}, {"layers", 1},
                 {"heads", 2}, {"ffn", 16}}},
      {"train", {{"max_epochs", 2}, {"patience", 1}}},
      {"runs", {"RunOrig", "R15"}},
  };
}

// One finished trial with the given counts, for reporting tests.
TrialOutcome fake_trial(const std::string& run, int fold, ConfusionCounts c) {
  TrialOutcome t;
  t.run_id = run;
  t.fold = fold;
  FoldReport r;
  r.run_id = run;
  r.fold = fold;
  r.counts = c;
  r.metrics = compute_metrics(c);
  t.report = r;
  return t;
}

}  // namespace

TEST_CASE("experiment config round trip and hash") {
  const auto c = experiment_config_from_json(tiny_config_json());
  CHECK(c.folds == 2);
  CHECK(c.synth->count == 20);
  CHECK(c.model.hidden == 8);
  CHECK(c.train.max_epochs == 2);
  CHECK(c.selected_runs().size() == 2);
  auto all = tiny_config_json();
  all.erase("runs");
  CHECK(experiment_config_from_json(all).selected_runs().size() == 20);

  const auto back = experiment_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(to_json(back).dump() == to_json(c).dump());
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  auto moved = c;
  moved.output_dir = "elsewhere";
  moved.jobs = 7;
  CHECK(config_hash(moved) == config_hash(c));
  auto changed = c;
  changed.train.learning_rate = 1e-3;
  CHECK(config_hash(changed) != config_hash(c));
}

TEST_CASE("invalid experiment configs") {
  auto j = tiny_config_json();
  j["folds"] = 1;
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  j = tiny_config_json();
  j["runs"] = {"R19"};
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  j = tiny_config_json();
  j["manifest"] = "data/manifest.json";
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);  // both data sources
  j = tiny_config_json();
  j["train"]["batch_size"] = "big";
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("seed override replaces every seed") {
  auto c = experiment_config_from_json(tiny_config_json());
  ::unsetenv("TACKLE_SEED");
  CHECK_FALSE(seed_override().has_value());
  ::setenv("TACKLE_SEED", "1234", 1);
  apply_seed_override(c);
  CHECK(c.split_seed == 1234);
  CHECK(c.train.seed == 1234);
  CHECK(c.augment.seed == 1234);
  CHECK(c.synth->seed == 1234);
  ::setenv("TACKLE_SEED", "12x", 1);
  CHECK_THROWS_AS(seed_override(), ConfigError);
  ::unsetenv("TACKLE_SEED");
}

TEST_CASE("experiment output is byte-identical across runs and job counts") {
  TempDir a, b;
  auto c = experiment_config_from_json(tiny_config_json());
  c.output_dir = a.path;
  const auto ra = run_pipeline(c);
  c.output_dir = b.path;
  c.jobs = 2;
  const auto rb = run_pipeline(c);
  REQUIRE(fs::exists(ra.results_path));
  CHECK(slurp(ra.results_path) == slurp(rb.results_path));
  CHECK(ra.stage_dir.filename() == config_hash(c));

  const auto& res = ra.results;
  CHECK(res["provenance"]["tool"] == "tackle");
  CHECK(res["provenance"]["config_hash"] == config_hash(c));
  CHECK(res["runs"] == nlohmann::json{"RunOrig", "R15"});
  CHECK(res["trials"].size() == 4);
  CHECK(res["summary"].contains("R15"));
  const std::string text = slurp(ra.results_path);
  CHECK(text.find(a.path.string()) == std::string::npos);

  for (const char* f : {"config.json", "design/runs.json", "design/l18.csv", "split/folds.json",
                        "report/metrics.csv", "report/confusion.json", "report/heatmap.svg"})
    CHECK_MESSAGE(fs::exists(ra.stage_dir / f), f);
  CHECK(fs::exists(ra.stage_dir / "trials" / "R15_fold1.json"));
  CHECK(fs::exists(ra.stage_dir / "materialized" / "R15" / "fold0.json"));
}

TEST_CASE("report layout over the full grid") {
  ExperimentConfig c;
  std::vector<TrialOutcome> trials;
  for (const auto& plan : enumerate_runs())
    for (int f = 0; f < 5; ++f)
      trials.push_back(fake_trial(plan.run_id.str(), f, {30 + plan.run_id.ordinal() % 7, 10, 85, 21}));
  const auto results = consolidate(c, trials);
  CHECK(results["runs"].size() == 20);

  const auto csv = metrics_csv(results);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(std::count(header.begin(), header.end(), ',') == 20);
  CHECK(header.rfind("metric,RunOrig,Run0,R1,R2,", 0) == 0);
  int rows = 0;
  for (std::string row; std::getline(lines, row);) {
    ++rows;
    CHECK(std::count(row.begin(), row.end(), ',') == 20);
  }
  CHECK(rows == 6);

  const auto conf = confusion_json(results);
  REQUIRE(conf.contains("R15"));
  const auto& m = conf["R15"]["percent"];
  CHECK(m[0][0].get<double>() + m[0][1].get<double>() == doctest::Approx(100.0));

  const auto svg = heatmap_svg(results);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("R18") != std::string::npos);

  TempDir dir;
  write_report(results, dir.path, {true});
  CHECK(slurp(dir.path / "metrics.csv") == csv);
  CHECK(fs::exists(dir.path / "metrics_sd.csv"));
  CHECK(fs::exists(dir.path / "heatmap.svg"));
}

TEST_CASE("command line stages and exit codes") {
  TempDir dir;
  const auto log = dir.path / "log.txt";
  CHECK(cli("design --out '" + (dir.path / "design").string() + "'", log) == 0);
  CHECK(fs::exists(dir.path / "design" / "l18.csv"));

  CHECK(cli("--bogus", log) == 2);
  CHECK(cli("split --k 5", log) == 2);
  CHECK(cli("split --manifest '" + (dir.path / "none.json").string() + "' --out x.json", log) == 3);

  const auto data = dir.path / "data";
  REQUIRE(cli("synth --count 20 --seed 5 --min-frames 40 --max-frames 44 --out '" + data.string() + "'", log) == 0);
  REQUIRE(cli("localize --manifest '" + (data / "manifest.json").string() + "' --out '" +
                  (dir.path / "loc").string() + "'",
              log) == 0);
  const auto folds = dir.path / "folds.json";
  REQUIRE(cli("split --manifest '" + (dir.path / "loc" / "manifest.json").string() + "' --k 2 --out '" +
                  folds.string() + "'",
              log) == 0);

  auto cfg = tiny_config_json();
  cfg.erase("synth");
  write_text(dir.path / "cfg.json", cfg.dump());
  const auto report = dir.path / "r15_f0.json";
  const auto ckpt = dir.path / "r15_f0.ckpt";
  REQUIRE(cli("train --folds '" + folds.string() + "' --run R15 --fold 0 --config '" + (dir.path / "cfg.json").string() +
                  "' --checkpoint '" + ckpt.string() + "' --out '" + report.string() + "'",
              log) == 0);
  const auto rep = nlohmann::json::parse(slurp(report));
  CHECK(rep["run_id"] == "R15");
  CHECK(rep["fold"] == 0);
  CHECK(fs::exists(ckpt));
  CHECK(cli("evaluate '" + report.string() + "' --out '" + (dir.path / "eval.json").string() + "'", log) == 0);
  const auto ev = nlohmann::json::parse(slurp(dir.path / "eval.json"));
  CHECK(ev["runs"].contains("R15"));
  CHECK(ev["best_run"] == "R15");

  CHECK(cli("train --folds '" + folds.string() + "' --run R15 --fold 9 --out x.json", log) == 2);
  CHECK(cli("train --folds '" + folds.string() + "' --run R99 --fold 0 --out x.json", log) == 2);

  cfg["train"]["learning_rate"] = 1e30;
  cfg["train"]["max_epochs"] = 3;
  write_text(dir.path / "wild.json", cfg.dump());
  CHECK(cli("train --folds '" + folds.string() + "' --run RunOrig --fold 1 --config '" +
                (dir.path / "wild.json").string() + "' --out '" + (dir.path / "wild_out.json").string() + "'",
            log) == 4);

  write_text(dir.path / "bad.json", R"({"folds": 1, "synth": {"count": 20}})");
  CHECK(cli("experiment --config '" + (dir.path / "bad.json").string() + "'", log) == 2);
}
