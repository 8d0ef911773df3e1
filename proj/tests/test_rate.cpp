#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mevt/error.hpp"
#include "mevt/rate.hpp"
#include "mevt/synth.hpp"

using namespace mevt;

namespace {

struct Setup {
  std::vector<double> x, y;
  BgpdModel model, z;
  std::size_t n_train = 0;
};

Setup make_setup(double theta, std::size_t n, std::uint64_t seed) {
  SynthSpec s;
  s.theta = theta;
  s.n_total = n;
  s.seed = seed;
  auto [px, py] = generate(s);
  Setup st;
  st.x = std::move(px.samples);
  st.y = std::move(py.samples);
  st.n_train = n / 2;
  const std::span<const double> tx(st.x.data(), st.n_train), ty(st.y.data(), st.n_train);
  st.model = build_bgpd(tx, ty, 1.6, 1.6);
  st.z = fit_z_model(st.x, st.y, st.model);
  return st;
}

// Tail probability from the closed-form GPD survival.
double tail_p(const TailModel& m, double v) {
  const double e = m.threshold_u - v;
  return m.zeta * std::pow(1.0 + m.shape_xi * e / m.scale_sigma, -1.0 / m.shape_xi);
}

}  // namespace

TEST_CASE("eps_n fixed point with identical Beta laws") {
  const BetaParams b{2.0, 3.5};
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    const double max_r = 2.0 * eps / std::log(eps);
    CHECK(compute_eps_n(b, max_r, b, eps) == doctest::Approx(eps).epsilon(1e-9));
  }
}

TEST_CASE("eps_n is one when the training mass vanishes") {
  CHECK(compute_eps_n({200.0, 1.0}, -1e-3, {1.0, 200.0}, 1e-3) == 1.0);
}

TEST_CASE("invert_bgpd boundary values") {
  const BetaParams b{2.0, 2.0};
  CHECK(invert_bgpd(b, -0.01, 1.0) == 0.0);
  CHECK(invert_bgpd(b, -2.0, std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(invert_bgpd(b, -2.0, 1e-3), Error);
}

TEST_CASE("rate from quantile") {
  CHECK(rate_from_quantile(0.0) == 0.0);
  CHECK(rate_from_quantile(1.0) == 1.0);
}

TEST_CASE("forward model reproduces eps_n at the inverted point") {
  for (double theta : {0.3, 0.5, 0.7}) {
    const Setup st = make_setup(theta, 200000, 21);
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      const RateDecision d = select_rate(st.model, eps, st.z.angular.beta);
      REQUIRE_FALSE(d.eps_n_underflow);
      const double g = bgpd_cdf_omega(st.model.angular.beta, st.model.max_r(), d.angular_quantile);
      CHECK(std::fabs(g - d.eps_n) <= 1e-8 * std::max(1.0, d.eps_n));
      const double a = 0.5 * d.max_r * std::log(d.eps_n);
      CHECK(std::fabs(beta_cdf(d.angular_quantile, d.train_beta) - a) <= 1e-10);
    }
  }
}

TEST_CASE("rate is monotone in eps on a fixed model") {
  const Setup st = make_setup(0.5, 200000, 22);
  double prev = INFINITY;
  for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
    const double r = select_rate(st.model, eps, st.z.angular.beta).rate_bits;
    CHECK(r <= prev);
    prev = r;
  }
}

TEST_CASE("zero rate never produces an outage") {
  const Setup st = make_setup(0.5, 100000, 23);
  RateDecision d = select_rate(st.model, 1e-3, st.z.angular.beta);
  d.rate_bits = 0.0;
  const auto test_x = std::span<const double>(st.x).subspan(st.n_train);
  const auto test_y = std::span<const double>(st.y).subspan(st.n_train);
  const OutageReport r = assess_outage(d, test_x, test_y, st.z);
  CHECK(r.violations == 0);
  CHECK(r.empirical_outage == 0.0);
  CHECK(r.satisfied);
}

TEST_CASE("rate at the test-side eps quantile gives outage near eps") {
  const Setup st = make_setup(0.5, 400000, 24);
  const auto test_x = std::span<const double>(st.x).subspan(st.n_train);
  const auto test_y = std::span<const double>(st.y).subspan(st.n_train);
  const TailModel& mx = st.z.tail_x;
  const TailModel& my = st.z.tail_y;
  std::vector<double> v;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    if (test_x[i] < mx.threshold_u && test_y[i] < my.threshold_u) {
      const double a = -1.0 / std::log1p(-tail_p(mx, test_x[i]));
      const double b = -1.0 / std::log1p(-tail_p(my, test_y[i]));
      v.push_back(std::log2(1.0 + a / (a + b)));
    }
  }
  std::sort(v.begin(), v.end());
  const double eps = 1e-3;
  const double n = static_cast<double>(test_x.size());
  const auto k = static_cast<std::size_t>(std::llround(eps * n));
  REQUIRE(v.size() > k + 1);
  RateDecision d = select_rate(st.model, eps, st.z.angular.beta);
  d.rate_bits = 0.5 * (v[k - 1] + v[k]);
  const OutageReport r = assess_outage(d, test_x, test_y, st.z);
  CHECK(r.violations == k);
  CHECK(std::fabs(r.empirical_outage - eps) <= 3.0 * std::sqrt(eps / n));
  CHECK(r.conditional_outage == doctest::Approx(static_cast<double>(k) / v.size()));
}

TEST_CASE("outage with the selected rate on held-out data") {
  const Setup st = make_setup(0.5, 400000, 25);
  const auto test_x = std::span<const double>(st.x).subspan(st.n_train);
  const auto test_y = std::span<const double>(st.y).subspan(st.n_train);
  for (double eps : {1e-3, 1e-4}) {
    const RateDecision d = select_rate(st.model, eps, st.z.angular.beta);
    const OutageReport r = assess_outage(d, test_x, test_y, st.z, true);
    const double n = static_cast<double>(r.n_test);
    CHECK(r.empirical_outage <= eps + 3.0 * std::sqrt(eps * (1 - eps) / n));
    CHECK(r.radial_diagnostic);
  }
}
