#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "mevt/confidence.hpp"
#include "mevt/error.hpp"
#include "mevt/rng.hpp"
#include "mevt/synth.hpp"

using namespace mevt;

namespace {

std::vector<double> gpd_exceedances(std::uint64_t seed, std::size_t n, double sigma, double xi) {
  Rng rng(seed);
  std::vector<double> e(n);
  for (double& v : e) v = sigma * (std::pow(rng.uniform_open(), -xi) - 1.0) / xi;
  return e;
}

GpdParams mle(std::span<const double> e) {
  std::vector<double> x(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) x[i] = -e[i];
  const TailModel m = fit_gpd(x, 1e-300);
  return m.params();
}

}  // namespace

TEST_CASE("bootstrap spread of the scale estimate") {
  const auto e = gpd_exceedances(31, 5000, 1.0, -0.2);
  BootstrapOptions opt;
  opt.B = 1000;
  opt.seed = 4;
  const auto r = bootstrap_gpd(e, mle(e), opt);
  std::vector<double> s;
  for (const auto& p : r.estimates) s.push_back(p.sigma);
  const double m = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  double ss = 0.0;
  for (double v : s) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / (s.size() - 1));
  CHECK(sd >= 0.014);
  CHECK(sd <= 0.026);
}

TEST_CASE("bootstrap is independent of the thread count") {
  const auto e = gpd_exceedances(32, 1000, 1.0, -0.2);
  const GpdParams p = mle(e);
  BootstrapOptions a;
  a.B = 200;
  a.seed = 9;
  BootstrapOptions b = a;
  b.threads = 4;
  const auto ra = bootstrap_gpd(e, p, a);
  const auto rb = bootstrap_gpd(e, p, b);
  REQUIRE(ra.estimates.size() == rb.estimates.size());
  for (std::size_t i = 0; i < ra.estimates.size(); ++i) {
    CHECK(ra.estimates[i].sigma == rb.estimates[i].sigma);
    CHECK(ra.estimates[i].xi == rb.estimates[i].xi);
  }
  const auto ja = jackknife_gpd(e, p, JackknifeMode::LeaveOneOut, 1);
  const auto jb = jackknife_gpd(e, p, JackknifeMode::LeaveOneOut, 3);
  REQUIRE(ja.estimates.size() == jb.estimates.size());
  for (std::size_t i = 0; i < ja.estimates.size(); ++i) CHECK(ja.estimates[i].xi == jb.estimates[i].xi);
}

TEST_CASE("too few bootstrap rounds is an argument error") {
  const auto e = gpd_exceedances(33, 500, 1.0, -0.2);
  BootstrapOptions opt;
  opt.B = 0;
  CHECK_THROWS_AS(bootstrap_gpd(e, mle(e), opt), Error);
}

TEST_CASE("BCA factors: symmetric bootstrap and flat jackknife") {
  std::vector<double> boot;
  for (int i = 1; i <= 1000; ++i) boot.push_back(i <= 500 ? -i : i);
  const std::vector<double> jack(50, 3.0);
  const BcaFactors f = bca_factors(0.0, boot, jack, 0.05);
  CHECK(f.z0 == 0.0);
  CHECK(f.a == 0.0);
  const boost::math::normal z;
  CHECK(f.a1 == doctest::Approx(boost::math::cdf(z, -1.959963984540054)).epsilon(1e-12));
  CHECK(f.a2 == doctest::Approx(0.975).epsilon(1e-12));

  CHECK_THROWS_AS(bca_factors(-1e9, boot, jack, 0.05), Error);
}

TEST_CASE("BCA ranks and the percentile special case") {
  std::vector<double> boot(999);
  std::iota(boot.begin(), boot.end(), 1.0);
  CHECK(bca_rank(0.025, 999) == 25);
  CHECK(bca_rank(0.975, 999) == 975);
  const auto iv = bca_interval(boot, percentile_factors(999, 0.05), 500.0);
  CHECK(iv.lower == 25.0);
  CHECK(iv.upper == 975.0);

  Rng rng(5);
  std::vector<double> skewed(1000);
  for (double& v : skewed) v = rng.exponential();
  for (double alpha : {0.05, 0.2, 0.5}) {
    const auto a = bca_interval(skewed, percentile_factors(1000, alpha), 1.0);
    const auto b = percentile_interval(skewed, alpha, 1.0);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
  }
}

TEST_CASE("jackknife cardinality, centring and acceleration") {
  const auto e = gpd_exceedances(34, 100, 1.0, -0.2);
  const GpdParams p = mle(e);
  const auto j = jackknife_gpd(e, p);
  CHECK(j.estimates.size() == 100);
  CHECK_FALSE(j.one_step);

  const auto big = gpd_exceedances(35, 500, 1.0, -0.2);
  const GpdParams pb = mle(big);
  const auto jb = jackknife_gpd(big, pb);
  std::vector<double> xi;
  for (const auto& q : jb.estimates) xi.push_back(q.xi);
  const double n = static_cast<double>(xi.size());
  const double m = std::accumulate(xi.begin(), xi.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : xi) ss += (v - m) * (v - m);
  const double se = std::sqrt((n - 1) / n * ss);
  CHECK(std::fabs(m - pb.xi) <= 2.0 * se);

  const auto first = jackknife_gpd(big, pb, JackknifeMode::LeaveFirstJ);
  CHECK(first.estimates.size() == 500 - 30);

  // leave-one-out means of symmetric data
  Rng rng(6);
  std::vector<double> v(2000);
  for (double& x : v) x = rng.normal();
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  std::vector<double> loo(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) loo[i] = (total - v[i]) / (v.size() - 1.0);
  CHECK(std::fabs(acceleration(loo)) <= 0.02);
  CHECK(acceleration(loo, AccelerationSign::Literal) == -acceleration(loo));
}

TEST_CASE("rate interval propagation") {
  SynthSpec s;
  s.n_total = 200000;
  s.seed = 41;
  const auto [px, py] = generate(s);
  const std::span<const double> x(px.samples.data(), 100000), y(py.samples.data(), 100000);
  const BgpdModel m = build_bgpd(x, y, 1.6, 1.6);
  const BgpdModel z = fit_z_model(px.samples, py.samples, m);
  const RateDecision d = select_rate(m, 1e-4, z.angular.beta);

  auto point_iv = [](double v) {
    IntervalEstimate iv;
    iv.point = iv.lower = iv.upper = v;
    return iv;
  };
  std::map<std::string, IntervalEstimate> zero{{"sigma_x", point_iv(m.tail_x.scale_sigma)},
                                               {"xi_x", point_iv(m.tail_x.shape_xi)},
                                               {"sigma_y", point_iv(m.tail_y.scale_sigma)},
                                               {"xi_y", point_iv(m.tail_y.shape_xi)}};
  const RateInterval r0 = propagate_rate_interval(m, d, zero, 0.05);
  CHECK(r0.rate_lower == doctest::Approx(d.rate_bits).epsilon(1e-12));
  CHECK(r0.rate_upper == doctest::Approx(d.rate_bits).epsilon(1e-12));

  CiOptions opt;
  opt.bootstrap.B = 400;
  opt.bootstrap.seed = 1;
  const auto rx = resample_gpd(exceedances(x, 1.6), m.tail_x.params(), opt);
  opt.bootstrap.seed = 2;
  const auto ry = resample_gpd(exceedances(y, 1.6), m.tail_y.params(), opt);
  double prev = INFINITY;
  for (double alpha : {0.05, 0.2, 0.5}) {
    const auto ix = gpd_intervals(rx, alpha);
    const auto iy = gpd_intervals(ry, alpha);
    const RateInterval ri = propagate_rate_interval(
        m, d, {{"sigma_x", ix.sigma}, {"xi_x", ix.xi}, {"sigma_y", iy.sigma}, {"xi_y", iy.xi}},
        alpha);
    CHECK(ri.rate_lower <= ri.rate_upper);
    const double w = ri.rate_upper - ri.rate_lower;
    CHECK(w <= prev);
    prev = w;
  }
}
