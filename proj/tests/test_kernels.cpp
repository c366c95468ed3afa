#include <doctest.h>

#include <cmath>
#include <random>

#include "tackle/kernels.hpp"
#include "tackle/vivit.hpp"

using namespace tackle;
namespace k = tackle::kernels;

namespace {

template <typename Real>
std::vector<Real> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(u(rng));
  return v;
}

template <typename Real>
constexpr double tol() {
  return std::is_same_v<Real, float> ? 1e-5 : 1e-13;
}

// Summation order differs between variants; compare relative to the magnitude sum.
template <typename Real>
void check_close(const std::vector<Real>& a, const std::vector<Real>& b, double scale) {
  REQUIRE(a.size() == b.size());
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(double(a[i]) - double(b[i])));
  CHECK(worst <= tol<Real>() * scale);
}

bool have_avx2() {
  if (k::avx2_table<float>() == nullptr) {
    MESSAGE("AVX2 variant unavailable; equivalence checks skipped");
    return false;
  }
  return true;
}

template <typename Real>
void kernel_equivalence() {
  const auto& s = k::scalar_table<Real>();
  const auto* v = k::avx2_table<Real>();
  REQUIRE(v != nullptr);
  CHECK(v->isa == k::Isa::kAvx2);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 100u, 257u}) {
    const auto a = noise<Real>(n, 1 + n), b = noise<Real>(n, 2 + n);
    CHECK(std::fabs(double(s.dot(a.data(), b.data(), n)) - double(v->dot(a.data(), b.data(), n))) <=
          tol<Real>() * (n + 1));
    auto y1 = noise<Real>(n, 3 + n), y2 = y1;
    s.axpy(Real(0.37), a.data(), y1.data(), n);
    v->axpy(Real(0.37), a.data(), y2.data(), n);
    check_close(y1, y2, 2.0);
  }
  for (auto [m, n, kk] : {std::tuple{1, 1, 1}, {3, 5, 7}, {8, 8, 8}, {17, 9, 33}, {65, 64, 192}, {4, 13, 256}}) {
    const auto a = noise<Real>(std::size_t(m) * kk, 10), b = noise<Real>(std::size_t(n) * kk, 11);
    for (bool acc : {false, true}) {
      auto c1 = noise<Real>(std::size_t(m) * n, 12), c2 = c1;
      s.gemm_nt(m, n, kk, a.data(), kk, b.data(), kk, c1.data(), n, acc);
      v->gemm_nt(m, n, kk, a.data(), kk, b.data(), kk, c2.data(), n, acc);
      check_close(c1, c2, kk + 1.0);
    }
  }
}

template <typename Real>
void composite_equivalence() {
  const std::size_t m = 13, n = 37, kk = 21;
  const auto a = noise<Real>(m * kk, 20), b = noise<Real>(kk * n, 21), at = noise<Real>(kk * m, 22);
  std::vector<Real> c1(m * n), c2(m * n), t1(m * n, Real(1)), t2(m * n, Real(1));
  {
    k::ScopedIsa scope(k::Isa::kScalar);
    k::gemm_nn(m, n, kk, a.data(), kk, b.data(), n, c1.data(), n, false);
    k::gemm_tn_acc(m, n, kk, at.data(), m, b.data(), n, t1.data(), n);
  }
  {
    k::ScopedIsa scope(k::Isa::kAvx2);
    REQUIRE(scope.ok());
    k::gemm_nn(m, n, kk, a.data(), kk, b.data(), n, c2.data(), n, false);
    k::gemm_tn_acc(m, n, kk, at.data(), m, b.data(), n, t2.data(), n);
  }
  check_close(c1, c2, kk + 1.0);
  check_close(t1, t2, kk + 1.0);

  // Against a naive triple loop.
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0, sum_t = 1;
      for (std::size_t r = 0; r < kk; ++r) {
        sum += double(a[i * kk + r]) * double(b[r * n + j]);
        sum_t += double(at[r * m + i]) * double(b[r * n + j]);
      }
      CHECK(std::fabs(sum - double(c1[i * n + j])) <= tol<Real>() * (kk + 1.0));
      CHECK(std::fabs(sum_t - double(t1[i * n + j])) <= tol<Real>() * (kk + 1.0));
    }
}

template <typename Real>
void model_equivalence() {
  const auto cfg = ModelConfig::desk();
  const auto params = init_parameters<Real>(cfg, 77);
  const auto input = noise<Real>(cfg.input_size(), 78);
  const std::vector<Real> dlogits{Real(0.3), Real(-0.3)};
  auto run = [&](k::Isa isa) {
    k::ScopedIsa scope(isa);
    REQUIRE(scope.ok());
    ForwardCache<Real> cache;
    const auto out = forward<Real>(input, params, cache);
    auto grads = ModelParameters<Real>::zeros(cfg);
    backward<Real>(params, cache, dlogits, grads);
    std::vector<Real> flat;
    grads.visit([&](std::string_view, const std::vector<Real>& t, int, int) {
      flat.insert(flat.end(), t.begin(), t.end());
    });
    return std::pair{out, flat};
  };
  const auto [fs, gs] = run(k::Isa::kScalar);
  const auto [fv, gv] = run(k::Isa::kAvx2);
  check_close(fs.logits, fv.logits, 100.0);
  check_close(fs.probs, fv.probs, 100.0);
  double gmax = 0;
  for (auto g : gs) gmax = std::max(gmax, std::fabs(double(g)));
  check_close(gs, gv, 100.0 * (gmax + 1.0));
}

}  // namespace

TEST_CASE("scalar table is always present") {
  CHECK(k::scalar_table<float>().isa == k::Isa::kScalar);
  CHECK(k::scalar_table<double>().isa == k::Isa::kScalar);
  CHECK(k::isa_name(k::Isa::kScalar) == "scalar");
  CHECK(k::isa_name(k::Isa::kAvx2) == "avx2");
}

TEST_CASE("selection and scoped override") {
  const auto before = k::active_isa();
  {
    k::ScopedIsa scope(k::Isa::kScalar);
    CHECK(scope.ok());
    CHECK(k::active_isa() == k::Isa::kScalar);
    CHECK(&k::active<float>() == &k::scalar_table<float>());
  }
  CHECK(k::active_isa() == before);
  if (!k::cpu_has_avx2()) {
    CHECK_FALSE(k::select(k::Isa::kAvx2));
    CHECK(k::active_isa() == before);
  }
}

TEST_CASE("primitive kernels agree across variants") {
  if (!have_avx2()) return;
  kernel_equivalence<float>();
  kernel_equivalence<double>();
}

TEST_CASE("composite products agree and match a naive loop") {
  if (!have_avx2()) return;
  composite_equivalence<float>();
  composite_equivalence<double>();
}

TEST_CASE("model forward and backward agree across variants") {
  if (!have_avx2()) return;
  model_equivalence<float>();
  model_equivalence<double>();
}
