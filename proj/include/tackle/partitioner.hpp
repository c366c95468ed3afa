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

namespace tackle {

struct FoldAssignment {
  int fold_count = 5;
  std::uint64_t seed = 42;
  // Validation members of each fold, in dealing order.
  std::vector<std::vector<std::string>> folds;

  // source_id -> fold index. Throws InvariantError if an id sits in several folds.
  std::map<std::string, int> index() const;
};

// Per class (Safe, then Risky): sort ids, shuffle with the seeded stream, deal
// round-robin. The deal position carries over between classes so fold sizes
// differ by at most one overall.
FoldAssignment stratified_kfold(const DatasetManifest& manifest, int k, std::uint64_t seed);

struct SynthesizedClip {
  std::string new_id;
  std::string parent;
  std::optional<FactorLevels> levels;  // nullopt: plain duplicate
  std::uint64_t seed = 0;              // augmentation stream
};

// A safe original replaced in training by its augmented version.
struct ReplacedOriginal {
  std::string source_id;
  FactorLevels levels;
  std::uint64_t seed = 0;
};

inline constexpr double kSafeSubsetFraction = 0.2;

struct TrainingSet {
  int fold = 0;
  RunId run = RunId::orig();
  std::vector<std::string> originals;
  std::vector<SynthesizedClip> synthesized;
  std::vector<ReplacedOriginal> replaced;

  std::size_t size() const noexcept { return originals.size() + synthesized.size(); }
};

TrainingSet balance_training(int fold, const FoldAssignment& assignment, const DatasetManifest& manifest,
                             const RunPlan& plan, const AugmentParams& params,
                             double safe_subset_fraction = kSafeSubsetFraction);

struct LeakageReport {
  bool pass = true;
  std::vector<std::string> violations;
};

LeakageReport check_leakage(const FoldAssignment& assignment, std::span<const TrainingSet> training_sets);

// One concrete training example after balancing, in the set's canonical order:
// originals (with replacements applied) followed by synthesized clips.
struct TrainingItem {
  std::string id;
  std::string parent;
  BinaryLabel label = BinaryLabel::kSafe;
  std::optional<FactorLevels> levels;
  std::uint64_t seed = 0;
};

std::vector<TrainingItem> training_items(const TrainingSet& set, const DatasetManifest& manifest);

// Applies the item's levels (if any) to the parent clip.
Clip materialize_item(const TrainingItem& item, const Clip& parent, const AugmentParams& params);

nlohmann::ordered_json folds_to_json(const FoldAssignment& a);
FoldAssignment folds_from_json(const nlohmann::json& j);

nlohmann::ordered_json training_set_to_json(const TrainingSet& set);

}  // namespace tackle
