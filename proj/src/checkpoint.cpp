#include "tackle/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "tackle/error.hpp"

namespace tackle {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename T>
  void value(T v) {
    raw(&v, sizeof(T));
  }
  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  // Host order is little endian on every supported target; bytes are emitted low first.
  template <typename T>
  void raw(const T* v, std::size_t n) {
    std::uint8_t tmp[8];
    std::memcpy(tmp, v, n);
    if constexpr (std::endian::native == std::endian::big) std::reverse(tmp, tmp + n);
    buf_.insert(buf_.end(), tmp, tmp + n);
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> b) : buf_(std::move(b)) {}
  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint16_t u16() { return take<std::uint16_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  template <typename T>
  T take() {
    need(sizeof(T));
    std::uint8_t tmp[sizeof(T)];
    std::memcpy(tmp, buf_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(tmp, tmp + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, tmp, sizeof(T));
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > buf_.size()) throw FormatError("checkpoint truncated");
  }
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

template <typename Real>
constexpr std::uint8_t dtype_tag() {
  return sizeof(Real) == 4 ? 1 : 2;
}

}  // namespace

template <typename Real>
void save_checkpoint(const std::filesystem::path& path, const ModelParameters<Real>& params) {
  Writer w;
  w.bytes("TCKP", 4);
  w.u16(kCheckpointVersion);
  const std::string cfg = to_json(params.config).dump();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg.data(), cfg.size());
  std::uint32_t count = 0;
  params.visit([&](std::string_view, const std::vector<Real>&, int, int) { ++count; });
  w.u32(count);
  params.visit([&](std::string_view name, const std::vector<Real>& t, int rows, int cols) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(dtype_tag<Real>());
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(rows));
    w.u32(static_cast<std::uint32_t>(cols));
    for (Real v : t) w.value(v);
  });
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
}

template <typename Real>
ModelParameters<Real> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  Reader r(std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {}));
  if (r.str(4) != "TCKP") throw FormatError("bad checkpoint magic");
  if (r.u16() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  const std::string cfg_text = r.str(r.u32());
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(nlohmann::json::parse(cfg_text));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  auto params = ModelParameters<Real>::zeros(cfg);
  std::map<std::string, std::vector<double>> tensors;
  std::map<std::string, std::pair<std::uint32_t, std::uint32_t>> shapes;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u16());
    const std::uint8_t dtype = r.u8();
    if (dtype != 1 && dtype != 2) throw FormatError("unknown tensor dtype in checkpoint");
    if (r.u32() != 2) throw FormatError("checkpoint tensors must be 2-D");
    const std::uint32_t rows = r.u32(), cols = r.u32();
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    for (auto& v : data) v = dtype == 1 ? static_cast<double>(r.take<float>()) : r.take<double>();
    shapes[name] = {rows, cols};
    tensors[name] = std::move(data);
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");
  params.visit([&](std::string_view name, std::vector<Real>& t, int rows, int cols) {
    const auto it = tensors.find(std::string(name));
    if (it == tensors.end()) throw FormatError("checkpoint missing tensor " + std::string(name));
    const auto [r0, c0] = shapes[std::string(name)];
    if (static_cast<int>(r0) != rows || static_cast<int>(c0) != cols)
      throw FormatError("checkpoint shape mismatch for " + std::string(name));
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = static_cast<Real>(it->second[j]);
  });
  return params;
}

template void save_checkpoint<float>(const std::filesystem::path&, const ModelParameters<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const ModelParameters<double>&);
template ModelParameters<float> load_checkpoint<float>(const std::filesystem::path&);
template ModelParameters<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace tackle
