#include <atomic>
#include <cstdlib>
#include <string_view>

#include "tackle/kernels.hpp"

namespace tackle::kernels {

#if defined(TACKLE_HAVE_AVX2)
namespace detail {
const KernelTable<float>* avx2_f32() noexcept;
const KernelTable<double>* avx2_f64() noexcept;
}  // namespace detail
#endif

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

bool cpu_has_avx2() noexcept {
#if defined(TACKLE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported;
#else
  return false;
#endif
}

template <>
const KernelTable<float>* avx2_table<float>() noexcept {
#if defined(TACKLE_HAVE_AVX2)
  return cpu_has_avx2() ? detail::avx2_f32() : nullptr;
#else
  return nullptr;
#endif
}

template <>
const KernelTable<double>* avx2_table<double>() noexcept {
#if defined(TACKLE_HAVE_AVX2)
  return cpu_has_avx2() ? detail::avx2_f64() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("TACKLE_KERNELS")) {
    if (std::string_view(env) == "scalar") return Isa::kScalar;
  }
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

bool select(Isa isa) noexcept {
  if (isa == Isa::kAvx2 && !cpu_has_avx2()) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

template <>
const KernelTable<float>& active<float>() noexcept {
  if (active_isa() == Isa::kAvx2) {
    if (const auto* t = avx2_table<float>()) return *t;
  }
  return scalar_table<float>();
}

template <>
const KernelTable<double>& active<double>() noexcept {
  if (active_isa() == Isa::kAvx2) {
    if (const auto* t = avx2_table<double>()) return *t;
  }
  return scalar_table<double>();
}

}  // namespace tackle::kernels
