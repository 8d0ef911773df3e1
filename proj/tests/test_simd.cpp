#include <cmath>
#include <vector>

#include "doctest.h"
#include "mevt/rng.hpp"
#include "mevt/simd.hpp"

using namespace mevt;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

bool close(double a, double b, double rel) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

TEST_CASE("dispatch selects a usable ISA and honours pinning") {
  const auto before = simd::active_isa();
  CHECK(simd::set_isa(simd::Isa::Scalar) == simd::Isa::Scalar);
  CHECK(simd::active_isa() == simd::Isa::Scalar);
  const auto got = simd::set_isa(simd::Isa::Avx2);
  CHECK(got == simd::best_available());
  simd::Isa parsed{};
  CHECK(simd::parse_isa("scalar", parsed));
  CHECK(parsed == simd::Isa::Scalar);
  CHECK_FALSE(simd::parse_isa("neon", parsed));
  simd::set_isa(before);
}

#if defined(MEVT_HAVE_AVX2)
TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (simd::best_available() != simd::Isa::Avx2) return;
  // Odd lengths exercise the remainder loops.
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 17u, 1000u, 100003u}) {
    CAPTURE(n);
    const auto x = random_vector(n, 11 + n, 0.0, 3.0);
    const auto y = random_vector(n, 97 + n, 0.5, 2.0);

    CHECK(simd::scalar::count_less(x, 1.3) == simd::avx2::count_less(x, 1.3));
    CHECK(close(simd::scalar::sum(x), simd::avx2::sum(x), 1e-12));

    const auto ms = simd::scalar::moments2(x, y);
    const auto mv = simd::avx2::moments2(x, y);
    CHECK(close(ms.mean_x, mv.mean_x, 1e-12));
    CHECK(close(ms.sxx, mv.sxx, 1e-11));
    CHECK(close(ms.syy, mv.syy, 1e-11));
    CHECK(close(ms.sxy, mv.sxy, 1e-9));

    for (std::size_t cluster : {1u, 2u, 3u, 4u, 5u, 9u, 50u}) {
      const std::size_t blocks = n / cluster;
      std::vector<double> a(blocks), b(blocks);
      simd::scalar::block_minima(x, cluster, a);
      simd::avx2::block_minima(x, cluster, b);
      CHECK(a == b);
    }

    std::vector<double> ps(10), pv(10);
    simd::scalar::power_sums(y, ps);
    simd::avx2::power_sums(y, pv);
    for (std::size_t m = 0; m < ps.size(); ++m) CHECK(close(ps[m], pv[m], 1e-12));

    for (double shape : {-0.3, -1e-9, 0.0, 0.2, 0.9}) {
      const double inv_scale = 1.0 / 1.7;
      const double c = shape * inv_scale;
      const auto ls = simd::scalar::gpd_log_terms(x, c);
      const auto lv = simd::avx2::gpd_log_terms(x, c);
      CHECK(close(ls.log_sum, lv.log_sum, 1e-12));
      CHECK(ls.min_z == lv.min_z);
      const auto gs = simd::scalar::gpd_terms(x, inv_scale, shape);
      const auto gv = simd::avx2::gpd_terms(x, inv_scale, shape);
      CHECK(close(gs.log_sum, gv.log_sum, 1e-12));
      CHECK(close(gs.ratio_sum, gv.ratio_sum, 1e-12));
      CHECK(close(gs.ratio2_sum, gv.ratio2_sum, 1e-12));
      CHECK(close(gs.cross_sum, gv.cross_sum, 1e-12));
      CHECK(gs.min_z == gv.min_z);
    }

    std::vector<double> rs(n), os(n), rv(n), ov(n);
    simd::scalar::pickands(x, y, 12345.0, rs, os);
    simd::avx2::pickands(x, y, 12345.0, rv, ov);
    CHECK(rs == rv);
    CHECK(os == ov);
  }
}

TEST_CASE("avx2 log accumulation stays accurate over long products") {
  if (simd::best_available() != simd::Isa::Avx2) return;
  // Values near the support edge make the product of z_i tiny; the
  // exponent-tracking accumulator must not underflow.
  std::vector<double> e(200000, 4.9);
  const auto s = simd::scalar::gpd_log_terms(e, -0.2);
  const auto v = simd::avx2::gpd_log_terms(e, -0.2);
  CHECK(close(s.log_sum, v.log_sum, 1e-12));
  CHECK(std::isfinite(v.log_sum));
}

TEST_CASE("support violations are reported identically") {
  if (simd::best_available() != simd::Isa::Avx2) return;
  std::vector<double> e{0.1, 0.2, 6.0, 0.3, 0.4};
  const auto s = simd::scalar::gpd_log_terms(e, -0.2);
  const auto v = simd::avx2::gpd_log_terms(e, -0.2);
  CHECK(s.min_z <= 0.0);
  CHECK(v.min_z <= 0.0);
}
#endif
