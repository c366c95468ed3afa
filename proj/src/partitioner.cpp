#include "tackle/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tackle/error.hpp"
#include "tackle/rng.hpp"

namespace tackle {

std::map<std::string, int> FoldAssignment::index() const {
  std::map<std::string, int> out;
  for (int f = 0; f < static_cast<int>(folds.size()); ++f)
    for (const auto& id : folds[f])
      if (!out.emplace(id, f).second) throw InvariantError("source_id " + id + " in more than one fold");
  return out;
}

FoldAssignment stratified_kfold(const DatasetManifest& manifest, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be >= 2");
  std::vector<std::string> by_class[2];
  for (const auto& e : manifest.entries) by_class[static_cast<int>(e.label.binary())].push_back(e.source_id);
  for (int c = 0; c < 2; ++c) {
    if (static_cast<int>(by_class[c].size()) < k)
      throw StratificationError(std::string("class ") + std::string(to_string(static_cast<BinaryLabel>(c))) +
                                " has " + std::to_string(by_class[c].size()) + " members, fewer than k=" +
                                std::to_string(k));
  }
  FoldAssignment a;
  a.fold_count = k;
  a.seed = seed;
  a.folds.assign(k, {});
  Rng rng(seed);
  std::size_t deal = 0;
  for (int c = 0; c < 2; ++c) {
    auto ids = by_class[c];
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    for (auto& id : ids) a.folds[deal++ % k].push_back(std::move(id));
  }
  return a;
}

TrainingSet balance_training(int fold, const FoldAssignment& assignment, const DatasetManifest& manifest,
                             const RunPlan& plan, const AugmentParams& params, double safe_subset_fraction) {
  if (fold < 0 || fold >= static_cast<int>(assignment.folds.size())) throw ConfigError("fold index out of range");
  const std::set<std::string> validation(assignment.folds[fold].begin(), assignment.folds[fold].end());

  TrainingSet set;
  set.fold = fold;
  set.run = plan.run_id;
  std::vector<std::string> risky, safe;
  for (const auto& e : manifest.entries) {
    if (validation.count(e.source_id)) continue;
    set.originals.push_back(e.source_id);
    (e.label.binary() == BinaryLabel::kRisky ? risky : safe).push_back(e.source_id);
  }
  if (plan.balancing == Balancing::kNoBalancing) return set;
  if (risky.empty()) throw BalancingError("empty risky training pool in fold " + std::to_string(fold));

  const std::uint64_t run_key = fnv1a(plan.run_id.str());
  Rng rng(derive_seed(params.seed, {run_key, static_cast<std::uint64_t>(fold), 1}));
  const int n_aug = std::max(0, static_cast<int>(safe.size()) - static_cast<int>(risky.size()));
  std::uniform_int_distribution<std::size_t> pick(0, risky.size() - 1);
  const bool augment = plan.balancing == Balancing::kAugmentToBalance;
  if (augment && !plan.levels) throw InvariantError("AugmentToBalance plan without levels");

  for (int i = 0; i < n_aug; ++i) {
    const std::string& parent = risky[pick(rng)];
    SynthesizedClip s;
    s.parent = parent;
    s.new_id = parent + "+" + plan.run_id.str() + ".f" + std::to_string(fold) + "." + std::to_string(i);
    if (augment) {
      s.levels = plan.levels;
      s.seed = derive_seed(params.seed, {run_key, static_cast<std::uint64_t>(fold), fnv1a(s.new_id)});
    }
    set.synthesized.push_back(std::move(s));
  }

  if (augment && safe_subset_fraction > 0) {
    const auto n_replace = static_cast<std::size_t>(std::lround(safe_subset_fraction * safe.size()));
    std::vector<std::string> pool = safe;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(n_replace, pool.size()));
    std::sort(pool.begin(), pool.end());
    for (auto& id : pool) {
      const std::uint64_t s = derive_seed(params.seed, {run_key, static_cast<std::uint64_t>(fold), fnv1a(id), 2});
      set.replaced.push_back({std::move(id), *plan.levels, s});
    }
  }
  return set;
}

LeakageReport check_leakage(const FoldAssignment& assignment, std::span<const TrainingSet> training_sets) {
  LeakageReport report;
  auto fail = [&](std::string msg) {
    report.pass = false;
    report.violations.push_back(std::move(msg));
  };

  std::map<std::string, int> membership;
  for (const auto& fold : assignment.folds)
    for (const auto& id : fold) ++membership[id];
  for (const auto& set : training_sets)
    for (const auto& id : set.originals) membership.try_emplace(id, 0);
  for (const auto& [id, count] : membership)
    if (count != 1)
      fail("source_id " + id + " appears in " + std::to_string(count) + " validation folds");

  for (const auto& set : training_sets) {
    if (set.fold < 0 || set.fold >= static_cast<int>(assignment.folds.size())) {
      fail("training set references fold " + std::to_string(set.fold));
      continue;
    }
    const std::set<std::string> validation(assignment.folds[set.fold].begin(), assignment.folds[set.fold].end());
    const std::set<std::string> originals(set.originals.begin(), set.originals.end());
    for (const auto& id : set.originals)
      if (validation.count(id))
        fail("fold " + std::to_string(set.fold) + ": validation clip " + id + " used for training");
    for (const auto& s : set.synthesized) {
      if (validation.count(s.parent))
        fail("fold " + std::to_string(set.fold) + ": synthesized " + s.new_id + " has validation parent " + s.parent);
      else if (!originals.count(s.parent))
        fail("fold " + std::to_string(set.fold) + ": synthesized " + s.new_id + " parent " + s.parent +
             " not in training originals");
    }
    for (const auto& r : set.replaced)
      if (validation.count(r.source_id))
        fail("fold " + std::to_string(set.fold) + ": validation clip " + r.source_id + " augmented");
  }
  return report;
}

std::vector<TrainingItem> training_items(const TrainingSet& set, const DatasetManifest& manifest) {
  std::map<std::string, const ReplacedOriginal*> replaced;
  for (const auto& r : set.replaced) replaced.emplace(r.source_id, &r);
  std::vector<TrainingItem> items;
  items.reserve(set.size());
  for (const auto& id : set.originals) {
    TrainingItem it;
    it.id = id;
    it.parent = id;
    it.label = manifest.find(id).label.binary();
    if (auto r = replaced.find(id); r != replaced.end()) {
      it.levels = r->second->levels;
      it.seed = r->second->seed;
    }
    items.push_back(std::move(it));
  }
  for (const auto& s : set.synthesized) {
    TrainingItem it;
    it.id = s.new_id;
    it.parent = s.parent;
    it.label = manifest.find(s.parent).label.binary();
    it.levels = s.levels;
    it.seed = s.seed;
    items.push_back(std::move(it));
  }
  return items;
}

Clip materialize_item(const TrainingItem& item, const Clip& parent, const AugmentParams& params) {
  if (!item.levels) return parent;
  AugmentParams p = params;
  p.seed = item.seed;
  return apply_config(parent, *item.levels, p);
}

nlohmann::ordered_json folds_to_json(const FoldAssignment& a) {
  nlohmann::ordered_json j;
  j["k"] = a.fold_count;
  j["seed"] = a.seed;
  j["folds"] = a.folds;
  return j;
}

FoldAssignment folds_from_json(const nlohmann::json& j) {
  try {
    FoldAssignment a;
    a.fold_count = j.at("k").get<int>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.folds = j.at("folds").get<std::vector<std::vector<std::string>>>();
    if (static_cast<int>(a.folds.size()) != a.fold_count) throw ConfigError("fold count mismatch in folds file");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed folds document: ") + e.what());
  }
}

nlohmann::ordered_json training_set_to_json(const TrainingSet& set) {
  nlohmann::ordered_json j;
  j["fold"] = set.fold;
  j["run_id"] = set.run.str();
  j["originals"] = set.originals;
  auto synth = nlohmann::ordered_json::array();
  for (const auto& s : set.synthesized) {
    nlohmann::ordered_json e{{"new_id", s.new_id}, {"parent", s.parent}};
    e["levels"] = s.levels ? nlohmann::ordered_json(format_levels(*s.levels)) : nlohmann::ordered_json("Duplicate");
    e["seed"] = s.seed;
    synth.push_back(std::move(e));
  }
  j["synthesized"] = std::move(synth);
  auto rep = nlohmann::ordered_json::array();
  for (const auto& r : set.replaced)
    rep.push_back({{"source_id", r.source_id}, {"levels", format_levels(r.levels)}, {"seed", r.seed}});
  j["replaced"] = std::move(rep);
  return j;
}

}  // namespace tackle
