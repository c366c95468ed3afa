#pragma once

// Augmentation factor space, the hard-coded L18 schedule, and the 20-run grid.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tackle {

enum class Noise : std::uint8_t { kNone, kAddNoise };
enum class Brightness : std::uint8_t { kSame, kIncrease, kDecrease };
enum class Rotation : std::uint8_t { kNone, kLeft, kRight };
enum class Flip : std::uint8_t { kNone, kHorizontal, kVertical };

struct FactorLevels {
  Noise noise = Noise::kNone;
  Brightness brightness = Brightness::kSame;
  Rotation rotation = Rotation::kNone;
  Flip flip = Flip::kNone;

  friend bool operator==(const FactorLevels&, const FactorLevels&) = default;
};

std::string_view to_string(Noise v);
std::string_view to_string(Brightness v);
std::string_view to_string(Rotation v);
std::string_view to_string(Flip v);

// Accepts the canonical names above plus the printed-schedule aliases ("Add noise", "None" for brightness).
Noise parse_noise(std::string_view s);
Brightness parse_brightness(std::string_view s);
Rotation parse_rotation(std::string_view s);
Flip parse_flip(std::string_view s);

// "NOISE,BRIGHT,ROT,FLIP", e.g. "AddNoise,Decrease,None,None".
FactorLevels parse_levels(std::string_view csv);
std::string format_levels(const FactorLevels& levels);

// Number of levels per factor column: 2, 3, 3, 3.
inline constexpr std::array<int, 4> kLevelCounts{2, 3, 3, 3};
inline constexpr std::array<std::string_view, 4> kFactorNames{"Noise", "Brightness", "Rotate", "Flip"};

// Level index of column `factor` (0..3) in `levels`.
int level_index(const FactorLevels& levels, int factor);

// The full 2*3*3*3 cross product.
std::vector<FactorLevels> full_factor_space();

struct TaguchiArray {
  std::vector<FactorLevels> rows;  // R1..R18
};

TaguchiArray build_l18();

struct PairBalance {
  int factor_a = 0;
  int factor_b = 0;
  // counts[i][j]: rows with level i of factor_a and level j of factor_b.
  std::vector<std::vector<int>> counts;
  bool uniform = false;
};

struct BalanceReport {
  bool pass = false;
  std::vector<PairBalance> pairs;  // all 6 column pairs
  std::vector<std::vector<int>> level_counts;  // per factor, per level
};

BalanceReport verify_orthogonality(const TaguchiArray& array);

enum class Balancing : std::uint8_t { kNoBalancing, kDuplicateOnly, kAugmentToBalance };

std::string_view to_string(Balancing b);

// RunOrig, Run0, or Taguchi row R1..R18.
class RunId {
 public:
  static RunId orig() { return RunId(-1); }
  static RunId duplicate() { return RunId(0); }
  static RunId taguchi(int row);  // 1-based
  static RunId parse(std::string_view s);

  bool is_orig() const noexcept { return value_ == -1; }
  bool is_duplicate() const noexcept { return value_ == 0; }
  bool is_taguchi() const noexcept { return value_ > 0; }
  int taguchi_row() const noexcept { return value_; }
  // Position in the canonical grid order (RunOrig=0, Run0=1, R1=2, ...).
  int ordinal() const noexcept { return value_ + 1; }
  std::string str() const;

  friend bool operator==(const RunId&, const RunId&) = default;
  friend auto operator<=>(const RunId&, const RunId&) = default;

 private:
  explicit RunId(int v) : value_(v) {}
  int value_;
};

struct RunPlan {
  RunId run_id = RunId::orig();
  std::optional<FactorLevels> levels;
  Balancing balancing = Balancing::kNoBalancing;
};

// [RunOrig, Run0, R1..R18].
std::vector<RunPlan> enumerate_runs();

RunPlan plan_for(RunId id);

// Serialization used by the `design` subcommand.
std::string runs_json(const std::vector<RunPlan>& plans);
std::string l18_csv(const TaguchiArray& array);

}  // namespace tackle
