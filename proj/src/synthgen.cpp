#include "tackle/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "tackle/error.hpp"
#include "tackle/rng.hpp"

namespace tackle {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (count < 2) throw ConfigError("synth count must be >= 2");
  if (!(risky_fraction > 0 && risky_fraction < 1)) throw ConfigError("risky_fraction must be in (0, 1)");
  if (min_frames < 3 || max_frames < min_frames) throw ConfigError("invalid synth frame range");
  if (height < 8 || width < 8) throw ConfigError("synth frames must be at least 8x8");
  if (!(illumination_min > 0) || illumination_max < illumination_min) throw ConfigError("invalid illumination range");
  if (!(background_noise >= 0) || !(blob_radius > 0)) throw ConfigError("invalid synth noise or blob radius");
}

int SynthConfig::risky_count() const { return static_cast<int>(std::lround(count * risky_fraction)); }

namespace {

constexpr double kBlobColor[3] = {220.0, 50.0, 40.0};

// Label layout: risky_count() ones shuffled among count slots.
bool is_risky(const SynthConfig& cfg, int index) {
  std::vector<char> layout(cfg.count, 0);
  std::fill(layout.begin(), layout.begin() + cfg.risky_count(), 1);
  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(cfg.count), 0x1abe1}));
  std::shuffle(layout.begin(), layout.end(), rng);
  return layout[index] != 0;
}

std::string source_id_for(int index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "clip_" + digits;
}

}  // namespace

SynthSample generate_sample(const SynthConfig& cfg, int index) {
  cfg.validate();
  if (index < 0 || index >= cfg.count) throw ConfigError("synth index out of range");
  const bool risky = is_risky(cfg, index);
  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(index), 0x5eed}));
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto uniform_int = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

  const int frames = uniform_int(cfg.min_frames, cfg.max_frames);
  const int fpoc = uniform_int(std::max(1, frames / 4), std::min(frames - 2, (3 * frames) / 4));
  const int score = risky ? uniform_int(0, 1) : uniform_int(2, 3);
  const int h = cfg.height, w = cfg.width;

  const double base = uniform(70.0, 130.0);
  const double tint[3] = {uniform(-8.0, 8.0), uniform(-8.0, 8.0), uniform(-8.0, 8.0)};
  const double gradient = uniform(-15.0, 15.0);
  const double gain = uniform(cfg.illumination_min, cfg.illumination_max);
  const double start_x = uniform(1.0, 0.2 * w), start_y = uniform(0.3 * h, 0.7 * h);
  const double target_x = uniform(0.45 * w, 0.6 * w);
  const double target_y = ((risky ? kRiskyTargetY : kSafeTargetY) + uniform(-kTargetJitter, kTargetJitter)) * h;

  Clip clip(frames, h, w);
  std::normal_distribution<double> noise(0.0, std::max(cfg.background_noise, 1e-12));
  for (int t = 0; t < frames; ++t) {
    const double a = t >= fpoc ? 1.0 : static_cast<double>(t) / fpoc;
    const double bx = start_x + (target_x - start_x) * a;
    const double by = start_y + (target_y - start_y) * a;
    for (int y = 0; y < h; ++y) {
      const double bg = base + gradient * (y / static_cast<double>(h - 1) - 0.5);
      for (int x = 0; x < w; ++x) {
        const double dist = std::hypot(x - bx, y - by);
        const double alpha = std::clamp(cfg.blob_radius + 0.5 - dist, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) {
          double v = (bg + tint[c]) * (1 - alpha) + kBlobColor[c] * alpha;
          v *= gain;
          if (cfg.background_noise > 0) v += noise(rng);
          clip.at(t, y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    }
  }
  return SynthSample{source_id_for(index), std::move(clip), FpocAnnotation{fpoc}, SattLabel(score)};
}

DatasetManifest generate(const SynthConfig& cfg, const fs::path& out_dir, int jobs) {
  cfg.validate();
  fs::create_directories(out_dir / "clips");
  DatasetManifest manifest;
  manifest.entries.resize(cfg.count);
  auto work = [&](int begin, int stride) {
    for (int i = begin; i < cfg.count; i += stride) {
      auto s = generate_sample(cfg, i);
      const std::string rel = "clips/" + s.source_id + ".tckl";
      write_clip(out_dir / rel, s.clip);
      ManifestEntry e;
      e.stored_path = rel;
      e.path = out_dir / rel;
      e.label = s.label;
      e.fpoc = s.fpoc;
      e.source_id = s.source_id;
      manifest.entries[i] = std::move(e);
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
    for (auto& t : pool) t.join();
  }
  manifest.recount();
  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

BlobLocation locate_blob(const Clip& clip, int t) {
  const int h = clip.height(), w = clip.width();
  std::vector<double> red(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      red[y * w + x] = clip.at(t, y, x, 0) - 0.5 * (clip.at(t, y, x, 1) + clip.at(t, y, x, 2));

  // 5x5 box filter to find the peak robustly under noise.
  int best_y = 0, best_x = 0;
  double best = -1e300;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      int n = 0;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
          s += red[yy * w + xx];
          ++n;
        }
      s /= n;
      if (s > best) {
        best = s;
        best_y = y;
        best_x = x;
      }
    }

  // Centroid of positive redness in a 7x7 window around the peak.
  double sw = 0, sy = 0, sx = 0;
  for (int dy = -3; dy <= 3; ++dy)
    for (int dx = -3; dx <= 3; ++dx) {
      const int yy = best_y + dy, xx = best_x + dx;
      if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
      const double r = std::max(0.0, red[yy * w + xx] - 0.5 * best);
      sw += r;
      sy += r * yy;
      sx += r * xx;
    }
  BlobLocation loc;
  loc.strength = best;
  loc.y = sw > 0 ? sy / sw : best_y;
  loc.x = sw > 0 ? sx / sw : best_x;
  return loc;
}

BinaryLabel oracle_label(const Clip& clip, FpocAnnotation fpoc) {
  if (fpoc.fpoc_index < 0 || fpoc.fpoc_index >= clip.frames()) throw AnnotationError("oracle FPOC outside clip");
  const auto loc = locate_blob(clip, fpoc.fpoc_index);
  if (loc.strength < 12.0) throw OracleError("no blob visible at the contact frame");
  // Pixel centres sit at y + 0.5.
  return (loc.y + 0.5) < kOracleCutY * clip.height() ? BinaryLabel::kRisky : BinaryLabel::kSafe;
}

}  // namespace tackle
