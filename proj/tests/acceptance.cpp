// Acceptance checks, one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,5,8]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "tackle/augmentor.hpp"
#include "tackle/designer.hpp"
#include "tackle/evaluator.hpp"
#include "tackle/focal_loss.hpp"
#include "tackle/partitioner.hpp"
#include "tackle/pipeline.hpp"
#include "tackle/synthgen.hpp"
#include "tackle/vivit.hpp"

using namespace tackle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("tackle_acceptance_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
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

DatasetManifest memory_manifest(int safe, int risky) {
  DatasetManifest m;
  for (int i = 0; i < safe + risky; ++i) {
    ManifestEntry e;
    e.source_id = "v" + std::to_string(i);
    e.path = e.source_id + ".tckl";
    e.label = SattLabel(i < safe ? 2 + i % 2 : i % 2);
    e.fpoc = {15};
    m.entries.push_back(std::move(e));
  }
  m.recount();
  return m;
}

RunPlan plan_named(const std::string& id) {
  for (const auto& p : enumerate_runs())
    if (p.run_id.str() == id) return p;
  throw std::runtime_error("unknown run " + id);
}

// ---- 1 ---------------------------------------------------------------------

Outcome l18_fidelity() {
  const auto t0 = Clock::now();
  // Noise, Brightness, Rotate, Flip as printed.
  static const char* printed[18][4] = {
      {"None", "Increase", "Left", "Horizontal"},      {"None", "Increase", "Right", "Vertical"},
      {"None", "Increase", "None", "None"},            {"None", "Decrease", "Left", "Vertical"},
      {"None", "Decrease", "Right", "None"},           {"None", "Decrease", "None", "Horizontal"},
      {"None", "None", "Left", "None"},                {"None", "None", "Right", "Horizontal"},
      {"None", "None", "None", "Vertical"},            {"Add noise", "Increase", "Left", "None"},
      {"Add noise", "Increase", "Right", "Horizontal"}, {"Add noise", "Increase", "None", "Vertical"},
      {"Add noise", "Decrease", "Left", "Horizontal"}, {"Add noise", "Decrease", "Right", "Vertical"},
      {"Add noise", "Decrease", "None", "None"},       {"Add noise", "None", "Left", "Vertical"},
      {"Add noise", "None", "Right", "None"},          {"Add noise", "None", "None", "Horizontal"},
  };
  const auto l18 = build_l18();
  int matches = 0;
  for (int r = 0; r < 18 && r < static_cast<int>(l18.rows.size()); ++r) {
    const auto& row = l18.rows[r];
    const bool same = (row.noise == Noise::kAddNoise) == (std::string(printed[r][0]) == "Add noise") &&
                      row.brightness == parse_brightness(printed[r][1]) &&
                      row.rotation == parse_rotation(printed[r][2]) && row.flip == parse_flip(printed[r][3]);
    matches += same;
  }
  // Pairwise balance by direct tally over the printed table.
  auto level = [](int factor, const char* v) {
    std::string s(v);
    if (factor == 0) return s == "None" ? 0 : 1;
    static const char* names[4][3] = {{}, {"Increase", "Decrease", "None"}, {"Left", "Right", "None"},
                                      {"Horizontal", "Vertical", "None"}};
    for (int i = 0; i < 3; ++i)
      if (s == names[factor][i]) return i;
    return -1;
  };
  bool balanced = true;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      int joint[3][3] = {};
      for (int r = 0; r < 18; ++r) ++joint[level(a, printed[r][a])][level(b, printed[r][b])];
      const int la = a == 0 ? 2 : 3, want = a == 0 ? 3 : 2;
      for (int i = 0; i < la; ++i)
        for (int j = 0; j < 3; ++j) balanced &= joint[i][j] == want;
    }
  const bool verified = verify_orthogonality(l18).pass;
  const double dt = seconds_since(t0);
  return {matches == 18 && l18.rows.size() == 18 && balanced && verified && dt < 1.0,
          fmt("%d/18 rows match, library balance check %s, independent tally %s, %.3f s", matches,
              verified ? "pass" : "fail", balanced ? "pass" : "fail", dt)};
}

// ---- 2 ---------------------------------------------------------------------

Outcome grid_arithmetic() {
  const auto t0 = Clock::now();
  const auto m = memory_manifest(474, 259);
  const auto a = stratified_kfold(m, 5, 42);
  std::set<std::size_t> sizes;
  std::set<int> risky_counts, n_aug, totals;
  for (int f = 0; f < 5; ++f) {
    sizes.insert(a.folds[f].size());
    int r = 0;
    for (const auto& id : a.folds[f]) r += m.find(id).label.binary() == BinaryLabel::kRisky;
    risky_counts.insert(r);
    const auto s = balance_training(f, a, m, plan_named("R15"), AugmentParams{});
    n_aug.insert(static_cast<int>(s.synthesized.size()));
    totals.insert(static_cast<int>(s.size()));
  }
  auto within = [](const std::set<int>& s, int lo, int hi) { return *s.begin() >= lo && *s.rbegin() <= hi; };
  const bool ok = std::includes(std::set<std::size_t>{146, 147}.begin(), std::set<std::size_t>{146, 147}.end(),
                                sizes.begin(), sizes.end()) &&
                  within(risky_counts, 51, 52) && within(n_aug, 171, 173) && within(totals, 757, 760);
  auto list = [](const auto& s) {
    std::string out;
    for (auto v : s) out += (out.empty() ? "" : ",") + std::to_string(v);
    return "{" + out + "}";
  };
  const double dt = seconds_since(t0);
  return {ok && dt < 1.0, "fold sizes " + list(sizes) + ", risky " + list(risky_counts) + ", N_aug " + list(n_aug) +
                              ", totals " + list(totals) + fmt(", %.3f s", dt)};
}

// ---- 3 ---------------------------------------------------------------------

Outcome leakage_guard() {
  const auto m = memory_manifest(474, 259);
  const auto a = stratified_kfold(m, 5, 42);
  std::vector<TrainingSet> sets;
  for (int f = 0; f < 5; ++f) sets.push_back(balance_training(f, a, m, plan_named("R15"), AugmentParams{}));
  const bool clean = check_leakage(a, sets).pass;

  auto parent_bad = sets;
  std::string victim;
  for (const auto& id : a.folds[0])
    if (m.find(id).label.binary() == BinaryLabel::kRisky) victim = id;
  parent_bad[0].synthesized[0].parent = victim;
  const bool caught_parent = !check_leakage(a, parent_bad).pass;

  auto twice = a;
  twice.folds[3].push_back(a.folds[1][0]);
  const bool caught_twice = !check_leakage(twice, sets).pass;
  return {clean && caught_parent && caught_twice,
          fmt("clean folds %s; augmented parent in validation %s; duplicate validation membership %s",
              clean ? "pass" : "FLAGGED", caught_parent ? "caught" : "missed", caught_twice ? "caught" : "missed")};
}

// ---- 4 ---------------------------------------------------------------------

Outcome tokenization() {
  const int reference = ModelConfig::reference().token_count();
  const int desk = ModelConfig::desk().token_count();
  const int by_hand = (32 / 2) * (224 / 16) * (224 / 16);
  std::mt19937_64 rng(4);
  auto pick = [&](std::initializer_list<int> v) { return *(v.begin() + rng() % v.size()); };
  int checked = 0, agree = 0;
  for (int i = 0; i < 150; ++i) {
    ModelConfig c;
    c.tubelet_t = pick({1, 2, 4});
    c.patch = pick({2, 4, 8});
    const int nt = 1 + rng() % 4, nh = 1 + rng() % 4, nw = 1 + rng() % 4;
    c.frames = c.tubelet_t * nt;
    c.height = c.patch * nh;
    c.width = c.patch * nw;
    c.heads = pick({1, 2, 4});
    c.hidden = c.heads * pick({2, 4});
    c.layers = 1;
    c.ffn = 8;
    c.validate();
    const auto params = init_parameters<double>(c, i);
    const std::vector<double> input(c.input_size(), 0.25);
    const auto z = tokenize<double>(input, params);
    const int rows = static_cast<int>(z.size()) / c.hidden;
    ++checked;
    agree += c.token_count() == nt * nh * nw && rows == nt * nh * nw + 1;
  }
  return {reference == 3136 && by_hand == 3136 && desk == 64 && checked >= 100 && agree == checked,
          fmt("reference config %d tokens, desk config %d tokens, %d/%d random configs agree", reference, desk, agree,
              checked)};
}

// ---- 5 ---------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  const auto groups = gradcheck::check_model(ModelConfig::desk(), 21);
  double worst = 0;
  std::string worst_name;
  for (const auto& g : groups) {
    const double e = std::max(g.coord_rel, g.dir_rel);
    if (e > worst) {
      worst = e;
      worst_name = g.name;
    }
  }
  double focal_worst = 0;
  const FocalLossConfig cfg;
  for (int y : {0, 1})
    for (double p : {0.01, 0.5, 0.99}) {
      const double d = std::log(p / (1 - p));
      double z[2] = {y == 0 ? d : 0.0, y == 1 ? d : 0.0};
      auto probs = [](double a, double b) {
        const double m = std::max(a, b), ea = std::exp(a - m), eb = std::exp(b - m);
        return std::vector<double>{ea / (ea + eb), eb / (ea + eb)};
      };
      const auto r = focal_loss(probs(z[0], z[1]), y, cfg);
      for (int j = 0; j < 2; ++j) {
        const double h = 1e-6;
        double zp[2] = {z[0], z[1]}, zm[2] = {z[0], z[1]};
        zp[j] += h;
        zm[j] -= h;
        const double fd = (focal_loss(probs(zp[0], zp[1]), y, cfg).loss - focal_loss(probs(zm[0], zm[1]), y, cfg).loss) /
                          (2 * h);
        focal_worst = std::max(focal_worst, std::fabs(fd - r.dlogits[j]) / std::fabs(fd));
      }
    }
  const double dt = seconds_since(t0);
  return {worst < 1e-4 && focal_worst < 1e-5 && dt < 120.0,
          fmt("%zu group checks, worst model rel err %.2e (%s), worst focal rel err %.2e, %.1f s", groups.size(), worst,
              worst_name.c_str(), focal_worst, dt)};
}

// ---- 6 ---------------------------------------------------------------------

Outcome focal_values() {
  const double half = modulating_factor(0.5, 1.6), tenth = modulating_factor(0.9, 1.6);
  double ce_worst = 0;
  for (double p : {0.001, 0.1, 0.35, 0.5, 0.8, 0.999}) {
    // alpha_y = 1 via alpha = 0.5 and a factor of two.
    const std::vector<double> probs{1 - p, p};
    ce_worst = std::max(ce_worst, std::fabs(2 * focal_loss(probs, 1, {0.0, 0.5}).loss + std::log(p)));
    ce_worst = std::max(ce_worst, std::fabs(2 * focal_loss(probs, 0, {0.0, 0.5}).loss + std::log(1 - p)));
  }
  return {std::fabs(half - 0.3299) <= 1e-4 && std::fabs(tenth - 0.02512) <= 1e-4 && ce_worst <= 1e-12,
          fmt("(0.5)^1.6 = %.5f, (0.1)^1.6 = %.5f, cross-entropy gap %.1e", half, tenth, ce_worst)};
}

// ---- 7 ---------------------------------------------------------------------

Outcome metric_kernels() {
  auto metrics_of = [](const std::vector<oracle::Sample>& s) {
    std::vector<ScoredSample> scores;
    for (const auto& x : s)
      scores.push_back({x.predicted_risky ? 1.0 : 0.0, x.risky ? BinaryLabel::kRisky : BinaryLabel::kSafe});
    return compute_metrics(counts_at(scores, 0.5));
  };
  auto agrees = [&](const std::vector<oracle::Sample>& s) {
    const auto want = oracle::tally(s);
    const auto got = metrics_of(s);
    for (int m = 0; m < 6; ++m)
      if (std::fabs(metric_value(got, m) - want[m]) > 1e-12) return false;
    return true;
  };
  long exhaustive = 0, exhaustive_bad = 0;
  for (int n = 1; n <= 12; ++n)
    for (std::uint32_t code = 0; code < (1u << (2 * n)); ++code) {
      std::vector<oracle::Sample> s(n);
      for (int i = 0; i < n; ++i) s[i] = {bool((code >> (2 * i)) & 1), bool((code >> (2 * i + 1)) & 1)};
      ++exhaustive;
      exhaustive_bad += !agrees(s);
    }
  std::mt19937_64 rng(7);
  int random_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<oracle::Sample> s(1 + rng() % 400);
    for (auto& x : s) x = {bool(rng() % 3 == 0), bool(rng() & 1)};
    random_bad += !agrees(s);
  }
  int sweep_bad = 0;
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + rng() % 80;
    std::vector<double> p(n);
    std::vector<bool> risky(n);
    std::vector<ScoredSample> s;
    for (int i = 0; i < n; ++i) {
      p[i] = (rng() % 2 ? double(rng() % 10) / 10 : std::uniform_real_distribution<double>(0, 1)(rng));
      risky[i] = rng() % 3 == 0;
      s.push_back({p[i], risky[i] ? BinaryLabel::kRisky : BinaryLabel::kSafe});
    }
    sweep_bad += std::fabs(select_threshold(s).macro_f1 - oracle::best_macro_f1(p, risky, oracle::full_sweep(p))) > 1e-12;
  }
  double row_worst = 0;
  for (int t = 0; t < 1000; ++t) {
    ConfusionCounts c{int(rng() % 300) + 1, int(rng() % 300), int(rng() % 300) + 1, int(rng() % 300)};
    const auto m = normalize_confusion(c);
    row_worst = std::max({row_worst, std::fabs(m[0][0] + m[0][1] - 100), std::fabs(m[1][0] + m[1][1] - 100)});
  }
  const double s13 = per_sample_step(13), s51 = per_sample_step(51), s146 = per_sample_step(146);
  const bool steps = std::round(s13 * 10) / 10 == 7.7 && std::round(s51 * 10) / 10 == 2.0 &&
                     std::round(s146 * 100) / 100 == 0.68;
  return {exhaustive_bad == 0 && random_bad == 0 && sweep_bad == 0 && row_worst <= 1e-9 && steps,
          fmt("%ld exhaustive vectors (%ld mismatches), 1000 random (%d), 500 sweeps (%d non-maximal), row sum err "
              "%.1e, steps %.2f/%.2f/%.3f pp",
              exhaustive, exhaustive_bad, random_bad, sweep_bad, row_worst, s13, s51, s146)};
}

// ---- 8 ---------------------------------------------------------------------

Outcome end_to_end() {
  TempDir dir("e2e");
  ExperimentConfig cfg;
  cfg.synth = SynthConfig{};  // 400 clips, 35.3% risky
  cfg.runs = {"RunOrig", "R15"};
  cfg.train.patience = 15;
  cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
  cfg.output_dir = dir.path;
  cfg.validate();
  const auto t0 = Clock::now();
  const auto result = run_pipeline(cfg);
  const double dt = seconds_since(t0);
  const double orig = result.results["summary"]["RunOrig"]["mean"]["risky_recall"].get<double>();
  const double r15 = result.results["summary"]["R15"]["mean"]["risky_recall"].get<double>();
  const int risky = cfg.synth->risky_count();
  return {r15 >= 0.90 && orig < r15 && dt < 600.0,
          fmt("%d clips (%d risky), R15 recall %.4f, RunOrig recall %.4f, %.0f s on %d thread(s)", cfg.synth->count,
              risky, r15, orig, dt, cfg.jobs)};
}

// ---- 9 ---------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TACKLE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  TempDir dir("det");
  const nlohmann::json cfg = {
      {"synth", {{"count", 40}, {"seed", 11}}},
      {"model", {{"frames", 4}, {"height", 16}, {"width", 16}, {"patch", 4}, {"hidden", 16}, {"layers", 1},
                 {"heads", 2}, {"ffn", 32}}},
      {"train", {{"max_epochs", 3}, {"patience", 2}}},
      {"runs", {"RunOrig", "Run0", "R15", "R13"}},
  };
  std::ofstream(dir.path / "cfg.json") << cfg.dump(2);
  const auto hash = config_hash(experiment_config_from_json(cfg));
  const int a = run_cli("experiment --config '" + (dir.path / "cfg.json").string() + "' --jobs 1 --out '" +
                        (dir.path / "a").string() + "'");
  const int b = run_cli("experiment --config '" + (dir.path / "cfg.json").string() + "' --jobs 3 --out '" +
                        (dir.path / "b").string() + "'");
  const auto ra = slurp(dir.path / "a" / hash / "results.json");
  const auto rb = slurp(dir.path / "b" / hash / "results.json");
  return {a == 0 && b == 0 && !ra.empty() && ra == rb,
          fmt("exit codes %d/%d, results %zu and %zu bytes, %s", a, b, ra.size(), rb.size(),
              ra == rb ? "identical" : "DIFFERENT")};
}

// ---- 10 --------------------------------------------------------------------

Outcome augmentation_semantics() {
  SynthConfig cfg;
  cfg.count = 200;
  AugmentParams params;
  const FactorLevels r15 = *plan_named("R15").levels;
  const FactorLevels vflip{Noise::kNone, Brightness::kSame, Rotation::kNone, Flip::kVertical};
  int photometric = 0, geometric = 0;
  for (int i = 0; i < cfg.count; ++i) {
    const auto s = generate_sample(cfg, i);
    const auto clip = localize_clip(s.clip, s.fpoc);
    const FpocAnnotation centre{kWindowBefore};
    params.seed = derive_seed(99, {static_cast<std::uint64_t>(i)});
    photometric += oracle_label(apply_config(clip, r15, params), centre) == s.label.binary();
    geometric += oracle_label(apply_config(clip, vflip, params), centre) == s.label.binary();
  }
  const double p = 100.0 * photometric / cfg.count, g = 100.0 * geometric / cfg.count;
  return {p >= 99.0 && g <= 60.0, fmt("oracle agreement %.1f%% after R15, %.1f%% after vertical flip", p, g)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"L18 fidelity", l18_fidelity},
      {"grid arithmetic", grid_arithmetic},
      {"leakage guard", leakage_guard},
      {"tokenization", tokenization},
      {"gradient correctness", gradients},
      {"focal-loss values", focal_values},
      {"metric kernels", metric_kernels},
      {"end-to-end learning", end_to_end},
      {"determinism", determinism},
      {"augmentation semantics", augmentation_semantics},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << " -- "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
