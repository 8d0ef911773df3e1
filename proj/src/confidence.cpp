#include "mevt/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "mevt/error.hpp"
#include "mevt/parallel.hpp"
#include "mevt/rng.hpp"
#include "mevt/specfun.hpp"

namespace mevt {

const char* to_string(IntervalMethod m) noexcept {
  switch (m) {
    case IntervalMethod::Bca: return "BCA";
    case IntervalMethod::Percentile: return "Percentile";
    case IntervalMethod::Wald: return "Wald";
  }
  return "?";
}

namespace {

void check_failures(std::size_t failed, std::size_t total, const char* what) {
  // more than 1% of the rounds
  if (failed * 100 > total) {
    fail(ErrorKind::Bootstrap, std::string(what) + ": " + std::to_string(failed) + " of " +
                                   std::to_string(total) + " refits failed (limit 1%)");
  }
}

}  // namespace

BootstrapResult bootstrap_gpd(std::span<const double> e, GpdParams point,
                              const BootstrapOptions& opt) {
  if (opt.B < kMinBootstrapRounds) {
    fail(ErrorKind::Argument, "bootstrap: B = " + std::to_string(opt.B) + " (at least " +
                                  std::to_string(kMinBootstrapRounds) + " rounds required)");
  }
  if (e.size() < kMinExceedances) {
    fail(ErrorKind::Fit, "bootstrap: fewer than 30 exceedances");
  }
  std::vector<std::optional<GpdParams>> rounds(opt.B);
  parallel_for(opt.B, opt.threads, [&](std::size_t b) {
    Rng rng(derive_seed(opt.seed, b));
    std::vector<double> s(e.size());
    for (double& v : s) v = e[rng.below(e.size())];
    const GpdData data(std::move(s));
    if (auto fit = gpd_refit(data, point)) rounds[b] = fit->params;
  });
  BootstrapResult r;
  r.point = point;
  for (const auto& p : rounds) {
    if (p) {
      r.estimates.push_back(*p);
    } else {
      ++r.failed;
    }
  }
  check_failures(r.failed, opt.B, "bootstrap");
  return r;
}

BootstrapResult bootstrap_gpd(const IidSequence& seq, double u, const BootstrapOptions& opt) {
  const TailModel m = fit_gpd(seq, u);
  return bootstrap_gpd(exceedances(seq.values, u), m.params(), opt);
}

namespace {

// Newton step from the full-sample optimum with one observation removed.
std::optional<GpdParams> one_step(const GpdDerivatives& full, double e, GpdParams point) {
  const GpdDerivatives d = gpd_point_derivatives(e, point);
  if (!d.feasible) return std::nullopt;
  const double g1 = full.d_sigma - d.d_sigma;
  const double g2 = full.d_xi - d.d_xi;
  const double h11 = full.d_sigma_sigma - d.d_sigma_sigma;
  const double h12 = full.d_sigma_xi - d.d_sigma_xi;
  const double h22 = full.d_xi_xi - d.d_xi_xi;
  const double det = h11 * h22 - h12 * h12;
  if (!(det > 0.0) || !(h11 < 0.0)) return std::nullopt;
  const double s = (h22 * g1 - h12 * g2) / det;
  const double x = (h11 * g2 - h12 * g1) / det;
  GpdParams p{point.sigma - s, point.xi - x};
  if (!(p.sigma > 0.0)) return std::nullopt;
  return p;
}

}  // namespace

JackknifeResult jackknife_gpd(std::span<const double> e, GpdParams point, JackknifeMode mode,
                              unsigned threads) {
  const std::size_t n = e.size();
  if (n < kMinExceedances + 1) {
    fail(ErrorKind::Fit, "jackknife: at least 31 exceedances required");
  }
  JackknifeResult r;
  r.mode = mode;
  std::vector<std::optional<GpdParams>> reps;
  if (mode == JackknifeMode::LeaveFirstJ) {
    const std::size_t count = n - kMinExceedances;
    reps.resize(count);
    parallel_for(count, threads, [&](std::size_t k) {
      const std::size_t j = k + 1;
      const GpdData data(std::vector<double>(e.begin() + static_cast<std::ptrdiff_t>(j), e.end()));
      if (auto fit = gpd_refit(data, point)) reps[k] = fit->params;
    });
  } else if (n > kExactJackknifeLimit) {
    r.one_step = true;
    reps.resize(n);
    const GpdData data(std::vector<double>(e.begin(), e.end()));
    const GpdDerivatives full = gpd_derivatives(data, point);
    parallel_for(n, threads, [&](std::size_t j) { reps[j] = one_step(full, e[j], point); });
  } else {
    reps.resize(n);
    parallel_for(n, threads, [&](std::size_t j) {
      std::vector<double> s;
      s.reserve(n - 1);
      s.insert(s.end(), e.begin(), e.begin() + static_cast<std::ptrdiff_t>(j));
      s.insert(s.end(), e.begin() + static_cast<std::ptrdiff_t>(j) + 1, e.end());
      const GpdData data(std::move(s));
      if (auto fit = gpd_refit(data, point)) reps[j] = fit->params;
    });
  }
  for (const auto& p : reps) {
    if (p) {
      r.estimates.push_back(*p);
    } else {
      ++r.failed;
    }
  }
  check_failures(r.failed, reps.size(), "jackknife");
  return r;
}

JackknifeResult jackknife_gpd(const IidSequence& seq, double u, JackknifeMode mode,
                              unsigned threads) {
  const TailModel m = fit_gpd(seq, u);
  return jackknife_gpd(exceedances(seq.values, u), m.params(), mode, threads);
}

double acceleration(std::span<const double> jack, AccelerationSign sign) {
  if (jack.empty()) fail(ErrorKind::Argument, "acceleration: no jackknife estimates");
  double mean = 0.0;
  for (double v : jack) mean += v;
  mean /= static_cast<double>(jack.size());
  double s2 = 0.0, s3 = 0.0;
  for (double v : jack) {
    const double d = sign == AccelerationSign::Standard ? mean - v : v - mean;
    s2 += d * d;
    s3 += d * d * d;
  }
  if (s2 == 0.0) return 0.0;
  return s3 / (6.0 * std::pow(s2, 1.5));
}

namespace {

BcaFactors make_factors(double z0, double a, std::size_t B, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Argument, "alpha must lie in (0, 1)");
  const double z = norm_inv_cdf(1.0 - alpha / 2.0);
  const double lo = z0 - z;
  const double hi = z0 + z;
  const double d1 = 1.0 - a * lo;
  const double d2 = 1.0 - a * hi;
  if (!(d1 > 0.0) || !(d2 > 0.0)) {
    fail(ErrorKind::Interval, "BCA: acceleration too large for the requested level");
  }
  BcaFactors f;
  f.z0 = z0;
  f.a = a;
  f.B = B;
  f.alpha = alpha;
  f.a1 = norm_cdf(z0 + lo / d1);
  f.a2 = norm_cdf(z0 + hi / d2);
  return f;
}

}  // namespace

BcaFactors bca_factors(double theta_hat, std::span<const double> boot, std::span<const double> jack,
                       double alpha, AccelerationSign sign) {
  if (boot.empty()) fail(ErrorKind::Argument, "bca_factors: empty bootstrap sample");
  std::size_t m = 0;
  for (double v : boot) m += v < theta_hat ? 1 : 0;
  if (m == 0 || m == boot.size()) {
    fail(ErrorKind::Interval,
         "BCA: bias correction is infinite (" + std::to_string(m) + " of " +
             std::to_string(boot.size()) + " bootstrap values below the estimate); increase B");
  }
  const double z0 = norm_inv_cdf(static_cast<double>(m) / static_cast<double>(boot.size()));
  return make_factors(z0, acceleration(jack, sign), boot.size(), alpha);
}

BcaFactors percentile_factors(std::size_t B, double alpha) {
  return make_factors(0.0, 0.0, B, alpha);
}

std::size_t bca_rank(double level, std::size_t B) {
  const double x = std::floor(level * static_cast<double>(B + 1) + 0.5);
  if (!(x >= 1.0)) return 1;
  if (x >= static_cast<double>(B)) return B;
  return static_cast<std::size_t>(x);
}

IntervalEstimate bca_interval(std::span<const double> boot, const BcaFactors& f, double point) {
  if (boot.empty()) fail(ErrorKind::Argument, "bca_interval: empty bootstrap sample");
  std::vector<double> s(boot.begin(), boot.end());
  std::sort(s.begin(), s.end());
  IntervalEstimate iv;
  iv.point = point;
  iv.alpha = f.alpha;
  iv.method = (f.z0 == 0.0 && f.a == 0.0) ? IntervalMethod::Percentile : IntervalMethod::Bca;
  iv.lower = s[bca_rank(f.a1, s.size()) - 1];
  iv.upper = s[bca_rank(f.a2, s.size()) - 1];
  iv.point_outside = point < iv.lower || point > iv.upper;
  return iv;
}

IntervalEstimate percentile_interval(std::span<const double> boot, double alpha, double point) {
  IntervalEstimate iv = bca_interval(boot, percentile_factors(boot.size(), alpha), point);
  iv.method = IntervalMethod::Percentile;
  return iv;
}

IntervalEstimate wald_interval(double point, double se, double alpha) {
  const double z = norm_inv_cdf(1.0 - alpha / 2.0);
  IntervalEstimate iv;
  iv.point = point;
  iv.alpha = alpha;
  iv.method = IntervalMethod::Wald;
  iv.lower = point - z * se;
  iv.upper = point + z * se;
  return iv;
}

GpdResamples resample_gpd(std::span<const double> e, GpdParams point, const CiOptions& opt) {
  GpdResamples rs;
  rs.point = point;
  const BootstrapResult boot = bootstrap_gpd(e, point, opt.bootstrap);
  const JackknifeResult jack = jackknife_gpd(e, point, opt.jackknife, opt.bootstrap.threads);
  rs.failed_bootstrap = boot.failed;
  rs.failed_jackknife = jack.failed;
  rs.one_step_jackknife = jack.one_step;
  for (const GpdParams& p : boot.estimates) {
    rs.boot_sigma.push_back(p.sigma);
    rs.boot_xi.push_back(p.xi);
  }
  for (const GpdParams& p : jack.estimates) {
    rs.jack_sigma.push_back(p.sigma);
    rs.jack_xi.push_back(p.xi);
  }
  return rs;
}

GpdIntervals gpd_intervals(const GpdResamples& rs, double alpha, AccelerationSign sign) {
  GpdIntervals g;
  g.sigma_factors = bca_factors(rs.point.sigma, rs.boot_sigma, rs.jack_sigma, alpha, sign);
  g.xi_factors = bca_factors(rs.point.xi, rs.boot_xi, rs.jack_xi, alpha, sign);
  g.sigma = bca_interval(rs.boot_sigma, g.sigma_factors, rs.point.sigma);
  g.xi = bca_interval(rs.boot_xi, g.xi_factors, rs.point.xi);
  g.failed_bootstrap = rs.failed_bootstrap;
  g.failed_jackknife = rs.failed_jackknife;
  g.one_step_jackknife = rs.one_step_jackknife;
  return g;
}

namespace {

const IntervalEstimate& need(const std::map<std::string, IntervalEstimate>& m,
                             const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) fail(ErrorKind::Argument, "rate interval: missing interval for " + key);
  return it->second;
}

struct Corner {
  BetaParams beta;
  double rate = 0.0;
};

Corner corner_rate(const BgpdModel& model, const RateDecision& decision, GpdParams px,
                   GpdParams py, const char* name) {
  const TailModel tx = with_params(model.tail_x, px);
  const TailModel ty = with_params(model.tail_y, py);
  Corner c;
  try {
    const FrechetPair fr = frechet_transform(model.joint, tx, ty);
    PickandsCoords pk = pickands_transform(fr);
    // max_r is held at its point value
    c.beta = fit_angular(pk, model.angular.symmetric).beta;
  } catch (const Error& err) {
    fail(ErrorKind::Interval, std::string("rate interval: ") + name + " corner invalid: " +
                                  err.what());
  }
  if (decision.eps_n_underflow) return c;
  c.rate = rate_from_quantile(beta_inv_cdf(decision.angular_arg, c.beta));
  return c;
}

}  // namespace

RateInterval propagate_rate_interval(const BgpdModel& model, const RateDecision& decision,
                                     const std::map<std::string, IntervalEstimate>& intervals,
                                     double alpha) {
  const IntervalEstimate& sx = need(intervals, "sigma_x");
  const IntervalEstimate& xx = need(intervals, "xi_x");
  const IntervalEstimate& sy = need(intervals, "sigma_y");
  const IntervalEstimate& xy = need(intervals, "xi_y");
  RateInterval ri;
  ri.decision = decision;
  ri.alpha = alpha;
  ri.parameter_intervals = intervals;
  const Corner lo = corner_rate(model, decision, {sx.upper, xx.lower}, {sy.lower, xy.upper}, "lower");
  const Corner hi = corner_rate(model, decision, {sx.lower, xx.upper}, {sy.upper, xy.lower}, "upper");
  ri.corner_lower_beta = lo.beta;
  ri.corner_upper_beta = hi.beta;
  ri.corner_lower_rate = lo.rate;
  ri.corner_upper_rate = hi.rate;
  ri.rate_lower = std::min(lo.rate, hi.rate);
  ri.rate_upper = std::max(lo.rate, hi.rate);
  if (decision.eps_n_underflow) {
    ri.warnings.emplace_back("eps_n underflow: rate interval collapses to 0");
  }
  ri.point_outside = decision.rate_bits < ri.rate_lower || decision.rate_bits > ri.rate_upper;
  if (ri.point_outside) ri.warnings.emplace_back("point rate lies outside the corner interval");
  return ri;
}

IntervalEstimate bootstrap_rate_interval(std::span<const double> x, std::span<const double> y,
                                         const BgpdModel& model, BetaParams test, double eps,
                                         double alpha, const BootstrapOptions& opt) {
  if (opt.B < kMinBootstrapRounds) {
    fail(ErrorKind::Argument, "bootstrap: at least 200 rounds required");
  }
  const RateDecision point = select_rate(model, eps, test);
  std::vector<std::optional<double>> rounds(opt.B);
  parallel_for(opt.B, opt.threads, [&](std::size_t b) {
    Rng rng(derive_seed(opt.seed, b));
    std::vector<double> bx(x.size()), by(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::size_t k = rng.below(x.size());
      bx[i] = x[k];
      by[i] = y[k];
    }
    try {
      const BgpdModel m = build_bgpd(bx, by, model.tail_x.threshold_u, model.tail_y.threshold_u,
                                     model.angular.symmetric);
      rounds[b] = select_rate(m, eps, test).rate_bits;
    } catch (const Error&) {
    }
  });
  std::vector<double> rates;
  std::size_t failed = 0;
  for (const auto& r : rounds) {
    if (r) {
      rates.push_back(*r);
    } else {
      ++failed;
    }
  }
  check_failures(failed, opt.B, "pipeline bootstrap");
  return percentile_interval(rates, alpha, point.rate_bits);
}

}  // namespace mevt
