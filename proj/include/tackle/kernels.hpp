#pragma once

// Dense arithmetic kernels behind the transformer. Every kernel has a scalar
// reference implementation; an AVX2+FMA table is added on x86 builds and chosen
// at runtime when the CPU supports it. TACKLE_KERNELS=scalar forces the
// reference path.

#include <cstddef>
#include <string_view>

namespace tackle::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa) noexcept;

template <typename Real>
struct KernelTable {
  Isa isa;
  Real (*dot)(const Real* a, const Real* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(Real alpha, const Real* x, Real* y, std::size_t n);
  // C[i,j] (+)= sum_k A[i,k] * B[j,k]; A is m x k, B is n x k, both row-major.
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
                  const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate);
};

template <typename Real>
const KernelTable<Real>& scalar_table() noexcept;

// nullptr when the build has no AVX2 variant or the CPU lacks AVX2/FMA.
template <typename Real>
const KernelTable<Real>* avx2_table() noexcept;

bool cpu_has_avx2() noexcept;

// Active table: best supported ISA unless overridden by TACKLE_KERNELS or select().
template <typename Real>
const KernelTable<Real>& active() noexcept;

Isa active_isa() noexcept;

// Returns false when the requested ISA is unavailable (selection unchanged).
bool select(Isa isa) noexcept;

class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { ok_ = select(isa); }
  ~ScopedIsa() { select(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;
  bool ok() const noexcept { return ok_; }

 private:
  Isa previous_;
  bool ok_ = false;
};

template <typename Real>
inline Real dot(const Real* a, const Real* b, std::size_t n) {
  return active<Real>().dot(a, b, n);
}

template <typename Real>
inline void axpy(Real alpha, const Real* x, Real* y, std::size_t n) {
  active<Real>().axpy(alpha, x, y, n);
}

template <typename Real>
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
                    const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate) {
  active<Real>().gemm_nt(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

// C[i,:] (+)= sum_k A[i,k] * B[k,:]; A is m x k, B is k x n.
template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
             const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate) {
  const auto& t = active<Real>();
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * ldc;
    if (!accumulate)
      for (std::size_t j = 0; j < n; ++j) crow[j] = Real(0);
    const Real* arow = a + i * lda;
    for (std::size_t r = 0; r < k; ++r) {
      if (arow[r] != Real(0)) t.axpy(arow[r], b + r * ldb, crow, n);
    }
  }
}

// C[i,:] += sum_r A[r,i] * B[r,:]; A is k x m, B is k x n. Always accumulates.
template <typename Real>
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
                 const Real* b, std::size_t ldb, Real* c, std::size_t ldc) {
  const auto& t = active<Real>();
  for (std::size_t r = 0; r < k; ++r) {
    const Real* arow = a + r * lda;
    const Real* brow = b + r * ldb;
    for (std::size_t i = 0; i < m; ++i) {
      if (arow[i] != Real(0)) t.axpy(arow[i], brow, c + i * ldc, n);
    }
  }
}

}  // namespace tackle::kernels
