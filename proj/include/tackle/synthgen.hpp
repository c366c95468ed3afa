#pragma once

#include <cstdint>
#include <filesystem>

#include "tackle/clipstore.hpp"

namespace tackle {

// Synthetic tackle-like clips: a red blob approaches from the left and, at the
// planted contact frame, settles in the upper band (risky) or just below the
// frame centre (safe). Background level, tint, gradient, illumination gain and
// sensor noise vary per clip.
struct SynthConfig {
  int count = 400;
  double risky_fraction = 0.353;
  int min_frames = 40;
  int max_frames = 120;
  int height = 32;
  int width = 32;
  double background_noise = 6.0;  // per-sample sigma, 8-bit units
  double blob_radius = 3.0;
  double illumination_min = 0.5;
  double illumination_max = 1.0;
  std::uint64_t seed = 7;

  void validate() const;
  int risky_count() const;  // round(count * risky_fraction)
};

// Vertical target bands as fractions of frame height, and the oracle cut between them.
inline constexpr double kRiskyTargetY = 0.25;
inline constexpr double kSafeTargetY = 0.60;
inline constexpr double kTargetJitter = 0.04;
inline constexpr double kOracleCutY = 0.425;

struct SynthSample {
  std::string source_id;
  Clip clip;
  FpocAnnotation fpoc;
  SattLabel label{2};
};

// Deterministic in (cfg, index); independent of other indices.
SynthSample generate_sample(const SynthConfig& cfg, int index);

// Writes DIR/clips/<id>.tckl and DIR/manifest.json; returns the manifest.
DatasetManifest generate(const SynthConfig& cfg, const std::filesystem::path& out_dir, int jobs = 1);

// Recovers the planted label from the frame at `fpoc`. Throws OracleError when
// no blob is visible.
BinaryLabel oracle_label(const Clip& clip, FpocAnnotation fpoc);

// Redness-weighted blob centroid at frame `t` (y, x) in pixels.
struct BlobLocation {
  double y = 0, x = 0, strength = 0;
};
BlobLocation locate_blob(const Clip& clip, int t);

}  // namespace tackle
