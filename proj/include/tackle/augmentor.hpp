#pragma once

#include <cstdint>

#include "tackle/clipstore.hpp"
#include "tackle/designer.hpp"
#include "tackle/rng.hpp"

namespace tackle {

struct AugmentParams {
  double noise_sigma = 10.0;       // 8-bit sample units
  double increase_factor = 1.5;    // V multiplier for Brightness::kIncrease
  double decrease_factor = 0.5;    // V multiplier for Brightness::kDecrease
  double rotation_degrees = 45.0;  // Left = +deg (counter-clockwise), Right = -deg
  std::uint64_t seed = 0;

  void validate() const;
  double brightness_factor(Brightness b) const;
  double rotation_for(Rotation r) const;
};

struct Hsv {
  double h = 0;  // [0, 360)
  double s = 0;  // [0, 1]
  double v = 0;  // [0, 1]
};

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

Hsv rgb_to_hsv(Rgb8 p);
Rgb8 hsv_to_rgb(Hsv p);

Clip apply_brightness(const Clip& clip, double factor);
Clip apply_noise(const Clip& clip, double sigma, Rng& rng);
// `degrees` in {-45, 0, +45} for the schedule; any value is accepted.
Clip apply_rotation(const Clip& clip, double degrees);
Clip apply_flip(const Clip& clip, Flip mode);

// Noise -> Brightness -> Rotate -> Flip, skipping None/Same. The noise stream is
// seeded from params.seed alone.
Clip apply_config(const Clip& clip, const FactorLevels& levels, const AugmentParams& params);

}  // namespace tackle
