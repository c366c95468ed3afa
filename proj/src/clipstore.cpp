#include "tackle/clipstore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tackle/error.hpp"

namespace tackle {

namespace fs = std::filesystem;

Clip::Clip(int frames, int height, int width, int channels, double frame_rate)
    : frames_(frames), height_(height), width_(width), channels_(channels), frame_rate_(frame_rate) {
  if (frames < 1 || height < 1 || width < 1 || channels != 3)
    throw FormatError("clip dimensions must be T,H,W >= 1 and C = 3");
  samples_.assign(static_cast<std::size_t>(frames) * height * width * channels, 0);
}

Clip::Clip(int frames, int height, int width, int channels, std::vector<std::uint8_t> samples,
           double frame_rate)
    : Clip(frames, height, width, channels, frame_rate) {
  if (samples.size() != samples_.size()) throw FormatError("sample count does not match clip shape");
  samples_ = std::move(samples);
}

std::string_view to_string(BinaryLabel label) { return label == BinaryLabel::kRisky ? "Risky" : "Safe"; }

SattLabel::SattLabel(int score) : score_(score) {
  if (score < 0 || score > 3) throw LabelError("SATT score must be in 0..3, got " + std::to_string(score));
}

Clip localize_clip(const Clip& raw, FpocAnnotation fpoc) {
  if (fpoc.fpoc_index < 0 || fpoc.fpoc_index >= raw.frames())
    throw AnnotationError("FPOC index " + std::to_string(fpoc.fpoc_index) + " outside clip of " +
                          std::to_string(raw.frames()) + " frames");
  Clip out(kWindowFrames, raw.height(), raw.width(), raw.channels(), raw.frame_rate());
  for (int i = 0; i < kWindowFrames; ++i) {
    const int src = std::clamp(fpoc.fpoc_index - kWindowBefore + i, 0, raw.frames() - 1);
    const auto from = raw.frame(src);
    std::copy(from.begin(), from.end(), out.frame(i).begin());
  }
  return out;
}

Clip resize_clip(const Clip& clip, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1) throw ConfigError("resize target must be >= 1");
  Clip out(clip.frames(), target_h, target_w, clip.channels(), clip.frame_rate());
  const double sy = static_cast<double>(clip.height()) / target_h;
  const double sx = static_cast<double>(clip.width()) / target_w;

  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> out(n_out);
    for (int o = 0; o < n_out; ++o) {
      const double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      const int i1 = std::min(i0 + 1, n_in - 1);
      out[o] = {i0, i1, src - i0};
    }
    return out;
  };
  const auto ty = taps(target_h, clip.height(), sy);
  const auto tx = taps(target_w, clip.width(), sx);

  for (int t = 0; t < clip.frames(); ++t)
    for (int y = 0; y < target_h; ++y)
      for (int x = 0; x < target_w; ++x)
        for (int c = 0; c < clip.channels(); ++c) {
          const auto& a = ty[y];
          const auto& b = tx[x];
          const double top = clip.at(t, a.i0, b.i0, c) * (1 - b.w1) + clip.at(t, a.i0, b.i1, c) * b.w1;
          const double bot = clip.at(t, a.i1, b.i0, c) * (1 - b.w1) + clip.at(t, a.i1, b.i1, c) * b.w1;
          const double v = top * (1 - a.w1) + bot * a.w1;
          out.at(t, y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
  return out;
}

namespace {

constexpr std::array<char, 4> kMagic{'T', 'C', 'K', 'L'};
constexpr std::size_t kHeaderSize = 4 + 2 + 4 * 4;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

ClipShape decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("clip header truncated");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                  [](char m, std::uint8_t b) { return static_cast<std::uint8_t>(m) == b; }))
    throw FormatError("bad clip magic");
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kClipFormatVersion) throw FormatError("unsupported clip version " + std::to_string(version));
  const std::uint32_t t = get_u32(bytes, 6), h = get_u32(bytes, 10), w = get_u32(bytes, 14), c = get_u32(bytes, 18);
  if (t == 0 || h == 0 || w == 0 || c != 3) throw FormatError("invalid clip shape header");
  if (t > (1u << 20) || h > (1u << 16) || w > (1u << 16)) throw FormatError("clip shape header out of range");
  return ClipShape{static_cast<int>(t), static_cast<int>(h), static_cast<int>(w), static_cast<int>(c)};
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::vector<std::uint8_t> encode_clip(const Clip& clip) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + clip.size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u16(out, kClipFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(clip.frames()));
  put_u32(out, static_cast<std::uint32_t>(clip.height()));
  put_u32(out, static_cast<std::uint32_t>(clip.width()));
  put_u32(out, static_cast<std::uint32_t>(clip.channels()));
  out.insert(out.end(), clip.samples().begin(), clip.samples().end());
  return out;
}

Clip decode_clip(std::span<const std::uint8_t> bytes) {
  const ClipShape s = decode_header(bytes);
  const std::size_t payload = static_cast<std::size_t>(s.frames) * s.height * s.width * s.channels;
  if (bytes.size() - kHeaderSize < payload) throw FormatError("clip payload truncated");
  if (bytes.size() - kHeaderSize > payload) throw FormatError("trailing bytes after clip payload");
  std::vector<std::uint8_t> samples(bytes.begin() + kHeaderSize, bytes.end());
  return Clip(s.frames, s.height, s.width, s.channels, std::move(samples));
}

void write_clip(const fs::path& path, const Clip& clip) {
  const auto bytes = encode_clip(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

Clip read_clip(const fs::path& path) { return decode_clip(read_file(path)); }

ClipShape read_clip_shape(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> header(kHeaderSize);
  in.read(reinterpret_cast<char*>(header.data()), static_cast<std::streamsize>(kHeaderSize));
  header.resize(static_cast<std::size_t>(in.gcount()));
  return decode_header(header);
}

void DatasetManifest::recount() {
  class_counts = {};
  for (const auto& e : entries) {
    if (e.label.binary() == BinaryLabel::kRisky) ++class_counts.risky;
    else ++class_counts.safe;
  }
}

const ManifestEntry& DatasetManifest::find(const std::string& source_id) const {
  const auto it = std::find_if(entries.begin(), entries.end(),
                               [&](const ManifestEntry& e) { return e.source_id == source_id; });
  if (it == entries.end()) throw ManifestError("unknown source_id " + source_id);
  return *it;
}

DatasetManifest parse_manifest(const std::string& json_text, const fs::path& base_dir, bool check_files) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ManifestError("manifest must be a JSON array");
  DatasetManifest m;
  std::set<std::string> seen;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("path") || !item.contains("satt_score") || !item.contains("fpoc") ||
        !item.contains("source_id"))
      throw ManifestError("manifest entry missing path/satt_score/fpoc/source_id");
    ManifestEntry e;
    try {
      e.stored_path = item.at("path").get<std::string>();
      e.label = SattLabel(item.at("satt_score").get<int>());
      e.fpoc.fpoc_index = item.at("fpoc").get<int>();
      e.source_id = item.at("source_id").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw ManifestError(std::string("malformed manifest entry: ") + ex.what());
    }
    const fs::path p(e.stored_path);
    e.path = p.is_absolute() ? p : base_dir / p;
    if (!seen.insert(e.source_id).second) throw ManifestError("duplicate source_id " + e.source_id);
    if (e.fpoc.fpoc_index < 0) throw AnnotationError("negative FPOC for " + e.source_id);
    if (check_files) {
      if (!fs::exists(e.path)) throw ManifestError("missing clip file " + e.path.string());
      const auto shape = read_clip_shape(e.path);
      if (e.fpoc.fpoc_index >= shape.frames)
        throw AnnotationError("FPOC " + std::to_string(e.fpoc.fpoc_index) + " beyond " +
                              std::to_string(shape.frames) + " frames for " + e.source_id);
    }
    m.entries.push_back(std::move(e));
  }
  m.recount();
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path(), true);
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& e : manifest.entries) {
    doc.push_back({{"path", e.stored_path.empty() ? e.path.string() : e.stored_path},
                   {"satt_score", e.label.score()},
                   {"fpoc", e.fpoc.fpoc_index},
                   {"source_id", e.source_id}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ManifestError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace tackle
