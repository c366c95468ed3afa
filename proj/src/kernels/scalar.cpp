#include "tackle/kernels.hpp"

namespace tackle::kernels {
namespace {

template <typename Real>
Real dot_scalar(const Real* a, const Real* b, std::size_t n) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename Real>
void axpy_scalar(Real alpha, const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename Real>
void gemm_nt_scalar(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t lda,
                    const Real* b, std::size_t ldb, Real* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real v = dot_scalar(a + i * lda, b + j * ldb, k);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + v : v;
    }
  }
}

constexpr KernelTable<float> kScalarF32{Isa::kScalar, &dot_scalar<float>, &axpy_scalar<float>,
                                       &gemm_nt_scalar<float>};
constexpr KernelTable<double> kScalarF64{Isa::kScalar, &dot_scalar<double>, &axpy_scalar<double>,
                                        &gemm_nt_scalar<double>};

}  // namespace

template <>
const KernelTable<float>& scalar_table<float>() noexcept {
  return kScalarF32;
}

template <>
const KernelTable<double>& scalar_table<double>() noexcept {
  return kScalarF64;
}

}  // namespace tackle::kernels
