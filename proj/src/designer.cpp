#include "tackle/designer.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "tackle/error.hpp"

namespace tackle {

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Noise v) { return v == Noise::kNone ? "None" : "AddNoise"; }

std::string_view to_string(Brightness v) {
  switch (v) {
    case Brightness::kSame: return "Same";
    case Brightness::kIncrease: return "Increase";
    case Brightness::kDecrease: return "Decrease";
  }
  return "?";
}

std::string_view to_string(Rotation v) {
  switch (v) {
    case Rotation::kNone: return "None";
    case Rotation::kLeft: return "Left";
    case Rotation::kRight: return "Right";
  }
  return "?";
}

std::string_view to_string(Flip v) {
  switch (v) {
    case Flip::kNone: return "None";
    case Flip::kHorizontal: return "Horizontal";
    case Flip::kVertical: return "Vertical";
  }
  return "?";
}

Noise parse_noise(std::string_view s) {
  const auto n = normalize(s);
  if (n == "none") return Noise::kNone;
  if (n == "addnoise" || n == "noise") return Noise::kAddNoise;
  throw ConfigError("unknown noise level: " + std::string(s));
}

Brightness parse_brightness(std::string_view s) {
  const auto n = normalize(s);
  if (n == "same" || n == "none") return Brightness::kSame;
  if (n == "increase") return Brightness::kIncrease;
  if (n == "decrease") return Brightness::kDecrease;
  throw ConfigError("unknown brightness level: " + std::string(s));
}

Rotation parse_rotation(std::string_view s) {
  const auto n = normalize(s);
  if (n == "none") return Rotation::kNone;
  if (n == "left") return Rotation::kLeft;
  if (n == "right") return Rotation::kRight;
  throw ConfigError("unknown rotation level: " + std::string(s));
}

Flip parse_flip(std::string_view s) {
  const auto n = normalize(s);
  if (n == "none") return Flip::kNone;
  if (n == "horizontal") return Flip::kHorizontal;
  if (n == "vertical") return Flip::kVertical;
  throw ConfigError("unknown flip level: " + std::string(s));
}

FactorLevels parse_levels(std::string_view csv) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = csv.find(',', start);
    parts.push_back(csv.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 4) throw ConfigError("levels must be NOISE,BRIGHT,ROT,FLIP: " + std::string(csv));
  return FactorLevels{parse_noise(parts[0]), parse_brightness(parts[1]), parse_rotation(parts[2]),
                      parse_flip(parts[3])};
}

std::string format_levels(const FactorLevels& l) {
  std::string out;
  out.append(to_string(l.noise)).append(",");
  out.append(to_string(l.brightness)).append(",");
  out.append(to_string(l.rotation)).append(",");
  out.append(to_string(l.flip));
  return out;
}

int level_index(const FactorLevels& l, int factor) {
  switch (factor) {
    case 0: return static_cast<int>(l.noise);
    case 1: return static_cast<int>(l.brightness);
    case 2: return static_cast<int>(l.rotation);
    case 3: return static_cast<int>(l.flip);
  }
  throw InvariantError("factor index out of range");
}

std::vector<FactorLevels> full_factor_space() {
  std::vector<FactorLevels> out;
  for (int n = 0; n < 2; ++n)
    for (int b = 0; b < 3; ++b)
      for (int r = 0; r < 3; ++r)
        for (int f = 0; f < 3; ++f)
          out.push_back({static_cast<Noise>(n), static_cast<Brightness>(b), static_cast<Rotation>(r),
                         static_cast<Flip>(f)});
  return out;
}

TaguchiArray build_l18() {
  using N = Noise;
  using B = Brightness;
  using R = Rotation;
  using F = Flip;
  return TaguchiArray{{
      {N::kNone, B::kIncrease, R::kLeft, F::kHorizontal},       // R1
      {N::kNone, B::kIncrease, R::kRight, F::kVertical},        // R2
      {N::kNone, B::kIncrease, R::kNone, F::kNone},             // R3
      {N::kNone, B::kDecrease, R::kLeft, F::kVertical},         // R4
      {N::kNone, B::kDecrease, R::kRight, F::kNone},            // R5
      {N::kNone, B::kDecrease, R::kNone, F::kHorizontal},       // R6
      {N::kNone, B::kSame, R::kLeft, F::kNone},                 // R7
      {N::kNone, B::kSame, R::kRight, F::kHorizontal},          // R8
      {N::kNone, B::kSame, R::kNone, F::kVertical},             // R9
      {N::kAddNoise, B::kIncrease, R::kLeft, F::kNone},         // R10
      {N::kAddNoise, B::kIncrease, R::kRight, F::kHorizontal},  // R11
      {N::kAddNoise, B::kIncrease, R::kNone, F::kVertical},     // R12
      {N::kAddNoise, B::kDecrease, R::kLeft, F::kHorizontal},   // R13
      {N::kAddNoise, B::kDecrease, R::kRight, F::kVertical},    // R14
      {N::kAddNoise, B::kDecrease, R::kNone, F::kNone},         // R15
      {N::kAddNoise, B::kSame, R::kLeft, F::kVertical},         // R16
      {N::kAddNoise, B::kSame, R::kRight, F::kNone},            // R17
      {N::kAddNoise, B::kSame, R::kNone, F::kHorizontal},       // R18
  }};
}

BalanceReport verify_orthogonality(const TaguchiArray& array) {
  BalanceReport report;
  report.pass = true;
  for (int f = 0; f < 4; ++f) {
    std::vector<int> counts(kLevelCounts[f], 0);
    for (const auto& row : array.rows) ++counts[level_index(row, f)];
    report.level_counts.push_back(std::move(counts));
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      PairBalance pair;
      pair.factor_a = a;
      pair.factor_b = b;
      pair.counts.assign(kLevelCounts[a], std::vector<int>(kLevelCounts[b], 0));
      for (const auto& row : array.rows) ++pair.counts[level_index(row, a)][level_index(row, b)];
      const int first = pair.counts[0][0];
      pair.uniform = first > 0;
      for (const auto& r : pair.counts)
        for (int c : r) pair.uniform = pair.uniform && c == first;
      report.pass = report.pass && pair.uniform;
      report.pairs.push_back(std::move(pair));
    }
  }
  return report;
}

std::string_view to_string(Balancing b) {
  switch (b) {
    case Balancing::kNoBalancing: return "NoBalancing";
    case Balancing::kDuplicateOnly: return "DuplicateOnly";
    case Balancing::kAugmentToBalance: return "AugmentToBalance";
  }
  return "?";
}

RunId RunId::taguchi(int row) {
  if (row < 1 || row > 18) throw ConfigError("Taguchi row out of range: " + std::to_string(row));
  return RunId(row);
}

RunId RunId::parse(std::string_view s) {
  const auto n = normalize(s);
  if (n == "runorig" || n == "orig") return orig();
  if (n == "run0" || n == "r0") return duplicate();
  std::string_view digits;
  if (n.rfind("run", 0) == 0) digits = std::string_view(n).substr(3);
  else if (n.rfind("r", 0) == 0) digits = std::string_view(n).substr(1);
  if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return taguchi(std::stoi(std::string(digits)));
  throw ConfigError("unknown run id: " + std::string(s));
}

std::string RunId::str() const {
  if (is_orig()) return "RunOrig";
  if (is_duplicate()) return "Run0";
  return "R" + std::to_string(value_);
}

RunPlan plan_for(RunId id) {
  if (id.is_orig()) return RunPlan{id, std::nullopt, Balancing::kNoBalancing};
  if (id.is_duplicate()) return RunPlan{id, std::nullopt, Balancing::kDuplicateOnly};
  static const TaguchiArray l18 = build_l18();
  return RunPlan{id, l18.rows[id.taguchi_row() - 1], Balancing::kAugmentToBalance};
}

std::vector<RunPlan> enumerate_runs() {
  std::vector<RunPlan> plans;
  plans.push_back(plan_for(RunId::orig()));
  plans.push_back(plan_for(RunId::duplicate()));
  for (int r = 1; r <= 18; ++r) plans.push_back(plan_for(RunId::taguchi(r)));
  return plans;
}

std::string runs_json(const std::vector<RunPlan>& plans) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& p : plans) {
    nlohmann::ordered_json item;
    item["run_id"] = p.run_id.str();
    if (p.levels) {
      item["levels"] = {{"noise", to_string(p.levels->noise)},
                        {"brightness", to_string(p.levels->brightness)},
                        {"rotation", to_string(p.levels->rotation)},
                        {"flip", to_string(p.levels->flip)}};
    } else {
      item["levels"] = nullptr;
    }
    item["balancing"] = to_string(p.balancing);
    doc.push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

std::string l18_csv(const TaguchiArray& array) {
  std::ostringstream os;
  os << "run,noise,brightness,rotate,flip\n";
  for (std::size_t i = 0; i < array.rows.size(); ++i) {
    const auto& r = array.rows[i];
    os << 'R' << (i + 1) << ',' << to_string(r.noise) << ',' << to_string(r.brightness) << ','
       << to_string(r.rotation) << ',' << to_string(r.flip) << '\n';
  }
  return os.str();
}

}  // namespace tackle
