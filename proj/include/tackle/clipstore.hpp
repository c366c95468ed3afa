#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tackle {

// T x H x W x C unsigned 8-bit frames, row-major, C = 3 (RGB).
class Clip {
 public:
  Clip() = default;
  Clip(int frames, int height, int width, int channels = 3, double frame_rate = 30.0);
  Clip(int frames, int height, int width, int channels, std::vector<std::uint8_t> samples,
       double frame_rate = 30.0);

  int frames() const noexcept { return frames_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  double frame_rate() const noexcept { return frame_rate_; }
  std::size_t frame_size() const noexcept {
    return static_cast<std::size_t>(height_) * width_ * channels_;
  }
  std::size_t size() const noexcept { return samples_.size(); }

  std::uint8_t& at(int t, int y, int x, int c) noexcept { return samples_[index(t, y, x, c)]; }
  std::uint8_t at(int t, int y, int x, int c) const noexcept { return samples_[index(t, y, x, c)]; }

  std::span<std::uint8_t> frame(int t) noexcept {
    return {samples_.data() + t * frame_size(), frame_size()};
  }
  std::span<const std::uint8_t> frame(int t) const noexcept {
    return {samples_.data() + t * frame_size(), frame_size()};
  }

  std::span<std::uint8_t> samples() noexcept { return samples_; }
  std::span<const std::uint8_t> samples() const noexcept { return samples_; }

  friend bool operator==(const Clip& a, const Clip& b) {
    return a.frames_ == b.frames_ && a.height_ == b.height_ && a.width_ == b.width_ &&
           a.channels_ == b.channels_ && a.samples_ == b.samples_;
  }

 private:
  std::size_t index(int t, int y, int x, int c) const noexcept {
    return ((static_cast<std::size_t>(t) * height_ + y) * width_ + x) * channels_ + c;
  }

  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 3;
  double frame_rate_ = 30.0;
  std::vector<std::uint8_t> samples_;
};

enum class BinaryLabel : std::uint8_t { kSafe = 0, kRisky = 1 };

std::string_view to_string(BinaryLabel label);

// SATT strike-zone score 0..3; scores <= 1 are risky.
class SattLabel {
 public:
  explicit SattLabel(int score);
  int score() const noexcept { return score_; }
  BinaryLabel binary() const noexcept { return score_ <= 1 ? BinaryLabel::kRisky : BinaryLabel::kSafe; }

 private:
  int score_;
};

struct FpocAnnotation {
  int fpoc_index = 0;
};

inline constexpr int kWindowBefore = 15;
inline constexpr int kWindowAfter = 16;
inline constexpr int kWindowFrames = kWindowBefore + 1 + kWindowAfter;

// 32 frames [fpoc-15, fpoc+16]; indices outside the clip replicate the edge frame.
Clip localize_clip(const Clip& raw, FpocAnnotation fpoc);

// Bilinear, half-pixel centres, edge clamped.
Clip resize_clip(const Clip& clip, int target_h, int target_w);

// Container: "TCKL", u16 version = 1, u32 T, H, W, C (little endian), then samples.
inline constexpr std::uint16_t kClipFormatVersion = 1;

void write_clip(const std::filesystem::path& path, const Clip& clip);
Clip read_clip(const std::filesystem::path& path);

struct ClipShape {
  int frames = 0, height = 0, width = 0, channels = 0;
};
ClipShape read_clip_shape(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_clip(const Clip& clip);
Clip decode_clip(std::span<const std::uint8_t> bytes);

struct ManifestEntry {
  std::filesystem::path path;  // resolved (absolute or relative to cwd)
  std::string stored_path;     // as written in the manifest
  SattLabel label{2};
  FpocAnnotation fpoc;
  std::string source_id;
};

struct ClassCounts {
  int safe = 0;
  int risky = 0;
  int total() const noexcept { return safe + risky; }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  ClassCounts class_counts;

  void recount();
  const ManifestEntry& find(const std::string& source_id) const;
};

// JSON array of {"path", "satt_score", "fpoc", "source_id"}. Relative clip paths
// resolve against the manifest's directory. Validates scores, FPOC bounds
// (against the clip header) and source_id uniqueness.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Same checks, without touching clip files (used for fold-level sub-manifests
// whose entries are not yet on disk).
DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir,
                               bool check_files);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace tackle
