#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "mevt/bivariate.hpp"
#include "mevt/error.hpp"
#include "mevt/rng.hpp"
#include "mevt/synth.hpp"

using namespace mevt;

namespace {

SynthSpec spec_with(DependenceFamily dep, std::size_t n, std::uint64_t seed) {
  SynthSpec s;
  s.dependence = dep;
  s.n_total = n;
  s.seed = seed;
  return s;
}

// Beta density from log-gamma, integrated by Gauss-Kronrod.
double beta_mass(BetaParams b, double w) {
  const double lb = std::lgamma(b.p) + std::lgamma(b.q) - std::lgamma(b.p + b.q);
  auto pdf = [&](double t) {
    return std::exp((b.p - 1) * std::log(t) + (b.q - 1) * std::log1p(-t) - lb);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(pdf, 0.0, w, 15, 1e-14);
}

}  // namespace

TEST_CASE("joint_filter keeps simultaneous exceedances only") {
  const std::vector<double> x{1, 5, 2}, y{1, 1, 9};
  const auto j = joint_filter(x, y, 3.0, 2.0);
  REQUIRE(j.size() == 1);
  CHECK(j.indices[0] == 0);
  CHECK(j.x_exceed[0] == 1.0);
  CHECK(j.n == 3);
  CHECK_THROWS_AS(joint_filter(x, y, 0.5, 0.5), Error);
}

TEST_CASE("independent channels: joint count near zeta_x zeta_y n") {
  const auto [x, y] = generate(spec_with(DependenceFamily::Independent, 1000000, 11));
  const auto j = joint_filter(x.samples, y.samples, 1.6, 1.6);
  const double expect = 0.05 * 0.05 * 1e6;
  CHECK(std::fabs(static_cast<double>(j.size()) - expect) <= 150.0);
}

TEST_CASE("Frechet transform at the threshold and monotonicity") {
  const double zeta = 0.05;
  CHECK(frechet_from_probability(zeta) == doctest::Approx(-1.0 / std::log(1.0 - zeta)).epsilon(1e-15));
  // deeper exceedances have smaller tail probability and larger x~
  double prev = INFINITY;
  for (double p = 1e-6; p < 0.9; p *= 1.7) {
    const double t = frechet_from_probability(p);
    CHECK(t < prev);
    prev = t;
  }
}

TEST_CASE("Frechet margins are unit Frechet on the full sample") {
  const auto [x, y] = generate(spec_with(DependenceFamily::Logistic, 100000, 5));
  const TailModel m = fit_gpd(x.samples, 1.6);
  // Transformed tail values; the bulk maps below the threshold value.
  std::vector<double> t;
  for (double v : x.samples) {
    if (v < m.threshold_u) t.push_back(frechet_from_probability(tail_probability(m, v)));
  }
  std::sort(t.begin(), t.end());
  const double n = static_cast<double>(x.samples.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    // full-sample ECDF just below and at t[i]
    const double above = static_cast<double>(t.size() - i);
    const double f = std::exp(-1.0 / t[i]);
    sup = std::max({sup, std::fabs(1.0 - above / n - f), std::fabs(1.0 - (above - 1) / n - f)});
  }
  CHECK(sup < 0.02);
}

TEST_CASE("Pickands coordinates") {
  FrechetPair fr;
  fr.n = 10;
  fr.x_tilde = {10.0, 10.0, 3.0};
  fr.y_tilde = {30.0, 10.0, 7.0};
  const auto pk = pickands_transform(fr);
  CHECK(pk.r[0] == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(pk.omega[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pk.omega[1] == 0.5);
  CHECK(pk.max_r == doctest::Approx(-1.0).epsilon(1e-15));

  Rng rng(3);
  FrechetPair rnd;
  rnd.n = 1000;
  for (int i = 0; i < 5000; ++i) {
    rnd.x_tilde.push_back(1.0 / rng.exponential());
    rnd.y_tilde.push_back(1.0 / rng.exponential());
  }
  const auto pr = pickands_transform(rnd);
  double worst = 0.0;
  for (std::size_t i = 0; i < pr.size(); ++i) {
    const double a = -rnd.x_tilde[i] / 1000.0, b = -rnd.y_tilde[i] / 1000.0;
    const double scale = std::fabs(pr.r[i]);
    worst = std::max({worst, std::fabs(pr.omega[i] * pr.r[i] - a) / scale,
                      std::fabs((1.0 - pr.omega[i]) * pr.r[i] - b) / scale});
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("angular fit on symmetric channels and degenerate omega") {
  const auto [x, y] = generate(spec_with(DependenceFamily::Logistic, 500000, 7));
  const BgpdModel m = build_bgpd(x.samples, y.samples, 1.6, 1.6);
  REQUIRE(m.joint.size() >= 10000);
  CHECK(m.angular.mean_omega >= 0.48);
  CHECK(m.angular.mean_omega <= 0.52);
  const AngularModel sym = fit_angular(m.pickands, true);
  CHECK(sym.beta.p == sym.beta.q);

  PickandsCoords flat;
  flat.omega.assign(50, 0.5);
  flat.r.assign(50, -1.0);
  flat.max_r = -1.0;
  CHECK_THROWS_AS(fit_angular(flat), Error);
}

TEST_CASE("bgpd_cdf boundary values") {
  const BetaParams b{2.5, 3.0};
  CHECK(bgpd_cdf_omega(b, -2.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(bgpd_cdf_omega(b, -2.0, 0.0) == 1.0);
}

TEST_CASE("bgpd_cdf agrees with quadrature of the angular density") {
  const auto [x, y] = generate(spec_with(DependenceFamily::Logistic, 200000, 9));
  const BgpdModel m = build_bgpd(x.samples, y.samples, 1.6, 1.6);
  const BetaParams b = m.angular.beta;
  double worst = 0.0;
  for (int i = 1; i <= 20; ++i) {
    const double w = i / 21.0;
    // Frechet pair with the given angle; the radius does not enter G.
    const double xt = w * 50.0, yt = (1.0 - w) * 50.0;
    const double oracle = std::exp(2.0 * beta_mass(b, w) / m.max_r());
    worst = std::max(worst, std::fabs(bgpd_cdf(m, xt, yt) - oracle));
  }
  CHECK(worst < 1e-6);
}
