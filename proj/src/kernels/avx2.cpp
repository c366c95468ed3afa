// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "tackle/kernels.hpp"

namespace tackle::kernels {
namespace {

struct F32 {
  using Real = float;
  using Vec = __m256;
  static constexpr std::size_t kLanes = 8;
  static Vec zero() { return _mm256_setzero_ps(); }
  static Vec load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, Vec v) { _mm256_storeu_ps(p, v); }
  static Vec set1(float v) { return _mm256_set1_ps(v); }
  static Vec fmadd(Vec a, Vec b, Vec c) { return _mm256_fmadd_ps(a, b, c); }
  static Vec add(Vec a, Vec b) { return _mm256_add_ps(a, b); }
  static float hsum(Vec v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

struct F64 {
  using Real = double;
  using Vec = __m256d;
  static constexpr std::size_t kLanes = 4;
  static Vec zero() { return _mm256_setzero_pd(); }
  static Vec load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, Vec v) { _mm256_storeu_pd(p, v); }
  static Vec set1(double v) { return _mm256_set1_pd(v); }
  static Vec fmadd(Vec a, Vec b, Vec c) { return _mm256_fmadd_pd(a, b, c); }
  static Vec add(Vec a, Vec b) { return _mm256_add_pd(a, b); }
  static double hsum(Vec v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

template <typename S>
typename S::Real dot_avx2(const typename S::Real* a, const typename S::Real* b, std::size_t n) {
  constexpr std::size_t L = S::kLanes;
  auto acc0 = S::zero();
  auto acc1 = S::zero();
  std::size_t i = 0;
  for (; i + 2 * L <= n; i += 2 * L) {
    acc0 = S::fmadd(S::load(a + i), S::load(b + i), acc0);
    acc1 = S::fmadd(S::load(a + i + L), S::load(b + i + L), acc1);
  }
  for (; i + L <= n; i += L) acc0 = S::fmadd(S::load(a + i), S::load(b + i), acc0);
  typename S::Real acc = S::hsum(S::add(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename S>
void axpy_avx2(typename S::Real alpha, const typename S::Real* x, typename S::Real* y, std::size_t n) {
  constexpr std::size_t L = S::kLanes;
  const auto va = S::set1(alpha);
  std::size_t i = 0;
  for (; i + L <= n; i += L) S::store(y + i, S::fmadd(va, S::load(x + i), S::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four output columns per pass so each A-row load feeds four FMAs.
template <typename S>
void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const typename S::Real* a,
                  std::size_t lda, const typename S::Real* b, std::size_t ldb, typename S::Real* c,
                  std::size_t ldc, bool accumulate) {
  using Real = typename S::Real;
  constexpr std::size_t L = S::kLanes;
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * lda;
    Real* crow = c + i * ldc;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const Real* b0 = b + (j + 0) * ldb;
      const Real* b1 = b + (j + 1) * ldb;
      const Real* b2 = b + (j + 2) * ldb;
      const Real* b3 = b + (j + 3) * ldb;
      auto s0 = S::zero(), s1 = S::zero(), s2 = S::zero(), s3 = S::zero();
      std::size_t r = 0;
      for (; r + L <= k; r += L) {
        const auto va = S::load(arow + r);
        s0 = S::fmadd(va, S::load(b0 + r), s0);
        s1 = S::fmadd(va, S::load(b1 + r), s1);
        s2 = S::fmadd(va, S::load(b2 + r), s2);
        s3 = S::fmadd(va, S::load(b3 + r), s3);
      }
      Real v0 = S::hsum(s0), v1 = S::hsum(s1), v2 = S::hsum(s2), v3 = S::hsum(s3);
      for (; r < k; ++r) {
        v0 += arow[r] * b0[r];
        v1 += arow[r] * b1[r];
        v2 += arow[r] * b2[r];
        v3 += arow[r] * b3[r];
      }
      if (accumulate) {
        crow[j] += v0;
        crow[j + 1] += v1;
        crow[j + 2] += v2;
        crow[j + 3] += v3;
      } else {
        crow[j] = v0;
        crow[j + 1] = v1;
        crow[j + 2] = v2;
        crow[j + 3] = v3;
      }
    }
    for (; j < n; ++j) {
      Real v = dot_avx2<S>(arow, b + j * ldb, k);
      crow[j] = accumulate ? crow[j] + v : v;
    }
  }
}

constexpr KernelTable<float> kAvx2F32{Isa::kAvx2, &dot_avx2<F32>, &axpy_avx2<F32>, &gemm_nt_avx2<F32>};
constexpr KernelTable<double> kAvx2F64{Isa::kAvx2, &dot_avx2<F64>, &axpy_avx2<F64>, &gemm_nt_avx2<F64>};

}  // namespace

namespace detail {
const KernelTable<float>* avx2_f32() noexcept { return &kAvx2F32; }
const KernelTable<double>* avx2_f64() noexcept { return &kAvx2F64; }
}  // namespace detail

}  // namespace tackle::kernels
