#include "tackle/augmentor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tackle/error.hpp"

namespace tackle {

void AugmentParams::validate() const {
  if (!(noise_sigma >= 0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(increase_factor > 0) || !(decrease_factor > 0)) throw ConfigError("brightness factors must be > 0");
}

double AugmentParams::brightness_factor(Brightness b) const {
  switch (b) {
    case Brightness::kSame: return 1.0;
    case Brightness::kIncrease: return increase_factor;
    case Brightness::kDecrease: return decrease_factor;
  }
  return 1.0;
}

double AugmentParams::rotation_for(Rotation r) const {
  switch (r) {
    case Rotation::kNone: return 0.0;
    case Rotation::kLeft: return rotation_degrees;
    case Rotation::kRight: return -rotation_degrees;
  }
  return 0.0;
}

Hsv rgb_to_hsv(Rgb8 p) {
  const double r = p.r / 255.0, g = p.g / 255.0, b = p.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0 ? delta / mx : 0.0;
  if (delta > 0) {
    double h;
    if (mx == r) h = std::fmod((g - b) / delta, 6.0);
    else if (mx == g) h = (b - r) / delta + 2.0;
    else h = (r - g) / delta + 4.0;
    h *= 60.0;
    if (h < 0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
  }
  return out;
}

Rgb8 hsv_to_rgb(Hsv p) {
  const double c = p.v * p.s;
  const double hp = p.h / 60.0;
  const double x = c * (1 - std::fabs(std::fmod(hp, 2.0) - 1));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = p.v - c;
  auto to8 = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); };
  return Rgb8{to8(r + m), to8(g + m), to8(b + m)};
}

Clip apply_brightness(const Clip& clip, double factor) {
  if (!(factor > 0)) throw ConfigError("brightness factor must be > 0");
  Clip out = clip;
  auto s = out.samples();
  for (std::size_t i = 0; i + 2 < s.size(); i += 3) {
    Hsv hsv = rgb_to_hsv({s[i], s[i + 1], s[i + 2]});
    hsv.v = std::clamp(hsv.v * factor, 0.0, 1.0);
    const Rgb8 p = hsv_to_rgb(hsv);
    s[i] = p.r;
    s[i + 1] = p.g;
    s[i + 2] = p.b;
  }
  return out;
}

Clip apply_noise(const Clip& clip, double sigma, Rng& rng) {
  if (!(sigma >= 0)) throw ConfigError("noise sigma must be >= 0");
  Clip out = clip;
  if (sigma == 0) return out;
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& x : out.samples()) {
    const double v = std::round(x + normal(rng));
    x = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

Clip apply_rotation(const Clip& clip, double degrees) {
  Clip out = clip;
  if (degrees == 0) return out;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const int h = clip.height(), w = clip.width(), ch = clip.channels();
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  for (int t = 0; t < clip.frames(); ++t) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Inverse map: image y grows downward, so a visually counter-clockwise
        // rotation by theta samples the source at R(theta)^-1 applied to the offset.
        const double ox = x - cx, oy = y - cy;
        const double sx = cx + cs * ox - sn * oy;
        const double sy = cy + sn * ox + cs * oy;
        const double fx = std::floor(sx), fy = std::floor(sy);
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const double ax = sx - fx, ay = sy - fy;
        for (int c = 0; c < ch; ++c) {
          auto tap = [&](int yy, int xx) -> double {
            if (xx < 0 || yy < 0 || xx >= w || yy >= h) return 0.0;
            return clip.at(t, yy, xx, c);
          };
          double v;
          if (ax < 1e-9 && ay < 1e-9) {
            v = tap(y0, x0);
          } else {
            v = (tap(y0, x0) * (1 - ax) + tap(y0, x0 + 1) * ax) * (1 - ay) +
                (tap(y0 + 1, x0) * (1 - ax) + tap(y0 + 1, x0 + 1) * ax) * ay;
          }
          out.at(t, y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    }
  }
  return out;
}

Clip apply_flip(const Clip& clip, Flip mode) {
  Clip out = clip;
  if (mode == Flip::kNone) return out;
  const int h = clip.height(), w = clip.width();
  for (int t = 0; t < clip.frames(); ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int sy = mode == Flip::kVertical ? h - 1 - y : y;
        const int sx = mode == Flip::kHorizontal ? w - 1 - x : x;
        for (int c = 0; c < clip.channels(); ++c) out.at(t, y, x, c) = clip.at(t, sy, sx, c);
      }
  return out;
}

Clip apply_config(const Clip& clip, const FactorLevels& levels, const AugmentParams& params) {
  params.validate();
  Clip out = clip;
  if (levels.noise == Noise::kAddNoise) {
    Rng rng(params.seed);
    out = apply_noise(out, params.noise_sigma, rng);
  }
  if (levels.brightness != Brightness::kSame) out = apply_brightness(out, params.brightness_factor(levels.brightness));
  if (levels.rotation != Rotation::kNone) out = apply_rotation(out, params.rotation_for(levels.rotation));
  if (levels.flip != Flip::kNone) out = apply_flip(out, levels.flip);
  return out;
}

}  // namespace tackle
