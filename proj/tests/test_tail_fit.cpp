#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mevt/error.hpp"
#include "mevt/rng.hpp"
#include "mevt/simd.hpp"
#include "mevt/tail_fit.hpp"

using namespace mevt;

namespace {

// Inverse-CDF GPD sampler.
double gpd_draw(Rng& rng, double sigma, double xi) {
  const double u = rng.uniform_open();
  if (xi == 0.0) return -sigma * std::log(u);
  return sigma * (std::pow(u, -xi) - 1.0) / xi;
}

// Samples whose lower tail below u0 is exactly GPD; everything is tail.
std::vector<double> lower_tail_sample(std::uint64_t seed, std::size_t n, double u0, double sigma,
                                      double xi) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = u0 - gpd_draw(rng, sigma, xi);
  return x;
}

IidSequence as_seq(std::vector<double> v) {
  IidSequence s;
  s.values = std::move(v);
  return s;
}

}  // namespace

TEST_CASE("GPD recovery from 1e5 exceedances") {
  const auto x = lower_tail_sample(1, 100000, 10.0, 1.0, -0.2);
  const auto m = fit_gpd(x, 10.0 + 1e-12);
  CHECK(m.n_exceed == 100000);
  CHECK(m.scale_sigma >= 0.99);
  CHECK(m.scale_sigma <= 1.01);
  CHECK(m.shape_xi >= -0.21);
  CHECK(m.shape_xi <= -0.19);
  CHECK(m.zeta * static_cast<double>(m.n_total) == static_cast<double>(m.n_exceed));
}

TEST_CASE("exponential exceedances give a near-zero shape") {
  const auto x = lower_tail_sample(2, 100000, 0.0, 1.0, 0.0);
  const auto m = fit_gpd(x, 1e-12);
  CHECK(std::fabs(m.shape_xi) <= 0.01);
}

TEST_CASE("fit rejects degenerate or tiny tails") {
  std::vector<double> same(100, 1.0);
  CHECK_THROWS_AS(fit_gpd(same, 2.0), Error);
  std::vector<double> few{1, 2, 3, 4};
  CHECK_THROWS_AS(fit_gpd(few, 10.0), Error);
}

TEST_CASE("optimizer never degrades its start and warns below -0.5") {
  for (double xi : {-0.7, -0.3, 0.0, 0.3}) {
    CAPTURE(xi);
    const auto x = lower_tail_sample(3, 2000, 0.0, 2.0, xi);
    const GpdData data(exceedances(x, 1e-12));
    const GpdFit fit = gpd_mle(data);
    CHECK(fit.loglik >= fit.start_loglik);
    const auto m = fit_gpd(x, 1e-12);
    CHECK((m.shape_xi <= -0.5) == !m.warnings.empty());
  }
}

TEST_CASE("scale equivariance of the fit") {
  const auto x = lower_tail_sample(4, 5000, 3.0, 0.7, -0.15);
  const double c = 7.5;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];
  const auto a = fit_gpd(x, 3.0 + 1e-9);
  const auto b = fit_gpd(y, c * (3.0 + 1e-9));
  CHECK(b.scale_sigma / (c * a.scale_sigma) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::fabs(b.shape_xi - a.shape_xi) < 1e-8);
}

TEST_CASE("analytic derivatives match finite differences across the series switch") {
  const auto x = lower_tail_sample(5, 3000, 0.0, 1.3, -0.3);
  const GpdData data(exceedances(x, 1e-12));
  for (double xi : {-0.25, -2e-3, -5e-4, 0.0, 4e-4, 0.2}) {
    CAPTURE(xi);
    const GpdParams p{1.4, xi};
    const auto d = gpd_derivatives(data, p);
    REQUIRE(d.feasible);
    CHECK(d.loglik == doctest::Approx(gpd_loglik(data, p)).epsilon(1e-12));
    const double hs = 1e-5;
    const double hx = 1e-5;
    const auto fd = [&](GpdParams a, GpdParams b, double h) {
      return (gpd_loglik(data, a) - gpd_loglik(data, b)) / (2 * h);
    };
    CHECK(d.d_sigma == doctest::Approx(fd({1.4 + hs, xi}, {1.4 - hs, xi}, hs)).epsilon(1e-6));
    CHECK(d.d_xi == doctest::Approx(fd({1.4, xi + hx}, {1.4, xi - hx}, hx)).epsilon(1e-6));
    const auto ds = [&](double s, double k) { return gpd_derivatives(data, {s, k}); };
    CHECK(d.d_sigma_sigma ==
          doctest::Approx((ds(1.4 + hs, xi).d_sigma - ds(1.4 - hs, xi).d_sigma) / (2 * hs))
              .epsilon(1e-6));
    CHECK(d.d_sigma_xi ==
          doctest::Approx((ds(1.4, xi + hx).d_sigma - ds(1.4, xi - hx).d_sigma) / (2 * hx))
              .epsilon(1e-6));
    CHECK(d.d_xi_xi ==
          doctest::Approx((ds(1.4, xi + hx).d_xi - ds(1.4, xi - hx).d_xi) / (2 * hx))
              .epsilon(1e-6));
  }
}

TEST_CASE("per-point derivatives sum to the sample derivatives") {
  const auto x = lower_tail_sample(6, 500, 0.0, 1.0, -0.2);
  const auto e = exceedances(x, 1e-12);
  const GpdData data(e);
  for (double xi : {-0.2, 1e-4}) {
    const GpdParams p{0.9, xi};
    GpdDerivatives sum;
    for (double v : e) {
      const auto d = gpd_point_derivatives(v, p);
      sum.loglik += d.loglik;
      sum.d_sigma += d.d_sigma;
      sum.d_xi_xi += d.d_xi_xi;
    }
    const auto full = gpd_derivatives(data, p);
    CHECK(sum.loglik == doctest::Approx(full.loglik).epsilon(1e-10));
    CHECK(sum.d_sigma == doctest::Approx(full.d_sigma).epsilon(1e-9));
    CHECK(sum.d_xi_xi == doctest::Approx(full.d_xi_xi).epsilon(1e-9));
  }
}

TEST_CASE("scalar and vector kernels give the same fit") {
  const auto x = lower_tail_sample(7, 20000, 0.0, 1.0, -0.25);
  const auto before = simd::active_isa();
  simd::set_isa(simd::Isa::Scalar);
  const auto a = fit_gpd(x, 1e-12);
  simd::set_isa(simd::best_available());
  const auto b = fit_gpd(x, 1e-12);
  simd::set_isa(before);
  CHECK(a.scale_sigma == doctest::Approx(b.scale_sigma).epsilon(1e-9));
  CHECK(std::fabs(a.shape_xi - b.shape_xi) < 1e-9);
}

TEST_CASE("gpd_cdf and gpd_quantile") {
  TailModel m;
  m.threshold_u = 2.0;
  m.scale_sigma = 1.5;
  m.shape_xi = -0.3;
  CHECK(gpd_cdf(m, 2.0) == 0.0);
  CHECK_THROWS_AS(gpd_cdf(m, 2.5), Error);
  CHECK_THROWS_AS(gpd_cdf(m, 2.0 - 5.01), Error);  // beyond sigma / |xi| = 5
  CHECK_THROWS_AS(gpd_quantile(m, 1.5), Error);

  TailModel e = m;
  e.shape_xi = 0.0;
  e.scale_sigma = 1.0;
  CHECK(gpd_cdf(e, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  e.shape_xi = 1e-8;
  CHECK(gpd_cdf(e, 1.0) == doctest::Approx(0.6321205588285577).epsilon(1e-7));

  double worst = 0.0;
  double prev = -1.0;
  // Up to 95% of the support; at the endpoint g rounds to 1 and the
  // inverse is ill-conditioned.
  for (int i = 0; i < 1000; ++i) {
    const double x = 2.0 - 4.75 * i / 999.0;
    const double g = gpd_cdf(m, x);
    CHECK(g >= prev);
    prev = g;
    worst = std::max(worst, std::fabs(gpd_quantile(m, g) - x));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("PP validation") {
  const auto x = lower_tail_sample(8, 10000, 0.0, 1.0, -0.2);
  const auto m = fit_gpd(x, 1e-12);
  const auto good = validate_fit(m, x);
  CHECK(good.pp_points.size() == 10000);
  CHECK(good.max_pp_deviation < 0.02);
  CHECK(good.passed);
  const auto bad = validate_fit(with_params(m, {m.scale_sigma, m.shape_xi + 0.5}), x);
  CHECK(bad.max_pp_deviation > 0.05);
  CHECK_FALSE(bad.passed);
  const auto none = validate_fit(m, std::vector<double>{1.0, 2.0});
  CHECK(none.pp_points.empty());
}

TEST_CASE("mean residual life diagnostics") {
  ThresholdGrid grid;
  grid.level_min = 0.01;
  grid.level_max = 0.5;
  grid.count = 20;
  {
    // Exponential lower tail: mean excess is flat within its bands.
    const auto x = lower_tail_sample(9, 1000000, 0.0, 1.0, 0.0);
    const auto d = mrl_diagnostic(as_seq(x), grid);
    REQUIRE(d.mrl_curve.size() == 20);
    for (const auto& p : d.mrl_curve) CHECK(std::fabs(p.mean_excess - 1.0) <= p.ci_halfwidth);
    CHECK(d.suggested_u.has_value());
  }
  {
    // GPD(1, -0.2): slope of mean excess against threshold is -xi / (1 - xi).
    const double xi = -0.2;
    const auto x = lower_tail_sample(10, 1000000, 0.0, 1.0, xi);
    const auto d = mrl_diagnostic(as_seq(x), grid);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(d.mrl_curve.size());
    for (const auto& p : d.mrl_curve) {
      sx += p.threshold;
      sy += p.mean_excess;
      sxx += p.threshold * p.threshold;
      sxy += p.threshold * p.mean_excess;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-xi / (1.0 - xi)).epsilon(0.05));
    CHECK(d.suggested_u.has_value());
  }
  {
    std::vector<double> tiny(10);
    for (std::size_t i = 0; i < tiny.size(); ++i) tiny[i] = static_cast<double>(i);
    const auto d = mrl_diagnostic(as_seq(tiny), grid);
    CHECK(d.mrl_curve.empty());
    CHECK_FALSE(d.warnings.empty());
    CHECK_FALSE(d.suggested_u.has_value());
  }
}

TEST_CASE("parameter stability diagnostics") {
  // Exactly GPD below u0 = 0, Gaussian-like bulk above it.
  Rng rng(11);
  std::vector<double> x;
  for (int i = 0; i < 200000; ++i) {
    if (rng.uniform() < 0.2) {
      x.push_back(-gpd_draw(rng, 1.0, -0.2));
    } else {
      x.push_back(std::fabs(rng.normal()) * 2.0);
    }
  }
  ThresholdGrid grid;
  grid.explicit_thresholds = {-1.5, -1.0, -0.7, -0.4, -0.2, 0.0};
  const auto d = stability_diagnostic(as_seq(x), grid);
  REQUIRE(d.stability_curves.size() == 6);
  for (const auto& p : d.stability_curves) {
    CHECK(std::fabs(p.xi + 0.2) <= p.xi_halfwidth * 1.5);
    // sigma + xi u = sigma0 + xi u0 = 1
    CHECK(std::fabs(p.modified_scale - 1.0) <= p.modified_scale_halfwidth * 1.5);
  }
  CHECK(d.suggested_u.has_value());

  ThresholdGrid one;
  one.explicit_thresholds = {-0.5};
  const auto d1 = stability_diagnostic(as_seq(x), one);
  REQUIRE(d1.stability_curves.size() == 1);
  CHECK(d1.suggested_u.value() == -0.5);
}
