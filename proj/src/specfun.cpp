#include "mevt/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mevt/error.hpp"

namespace mevt {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

void check_params(BetaParams params, const char* who) {
  if (!(params.p > 0.0) || !(params.q > 0.0) || !std::isfinite(params.p) ||
      !std::isfinite(params.q)) {
    fail(ErrorKind::Domain, std::string(who) + ": Beta shape parameters must be positive and finite");
  }
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxTerms = 300;
  constexpr double kTol = 1e-15;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kTol) return h;
  }
  fail(ErrorKind::Numerical, "beta_cdf: continued fraction did not converge in 300 terms");
}

// Remainder of Stirling's series: ln Gamma(z) - [(z-1/2) ln z - z + ln(2 pi)/2].
double stirling_tail(double z) {
  const double f = 1.0 / (z * z);
  return (1.0 / 12 - f * (1.0 / 360 - f * (1.0 / 1260 - f * (1.0 / 1680 - f / 1188)))) / z;
}

constexpr double kStirlingMin = 10.0;

// x^a y^b / B(a, b) with y = 1 - x supplied separately. For large shapes the
// Stirling form keeps the huge log-gamma terms from cancelling.
double beta_front(double x, double y, double a, double b) {
  if (std::min(a, b) >= kStirlingMin) {
    const double d = x * b - y * a;
    const double lf = a * std::log1p(d / a) + b * std::log1p(-d / b) +
                      0.5 * std::log(a * b / (a + b) / (2.0 * std::numbers::pi)) -
                      (stirling_tail(a) + stirling_tail(b) - stirling_tail(a + b));
    return std::exp(lf);
  }
  return std::exp(a * std::log(x) + b * std::log(y) - log_beta(a, b));
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) fail(ErrorKind::Domain, "log_gamma: argument must be positive");
  // Lanczos approximation, g = 671/128, 14 terms.
  static constexpr double kCof[14] = {
      57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
      -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
      -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
      .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
      -.261908384015814087e-4, .368991826595316234e-5};
  double y = x;
  double tmp = x + 5.24218750000000000;
  tmp = (x + 0.5) * std::log(tmp) - tmp;
  double ser = 0.999999999999997092;
  for (double c : kCof) ser += c / ++y;
  return tmp + std::log(2.5066282746310005 * ser / x);
}

double digamma(double x) {
  if (!(x > 0.0)) fail(ErrorKind::Domain, "digamma: argument must be positive");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  result += std::log(x) - 0.5 / x -
            f * (1.0 / 12 -
                 f * (1.0 / 120 -
                      f * (1.0 / 252 -
                           f * (1.0 / 240 - f * (1.0 / 132 - f * (691.0 / 32760 - f / 12))))));
  return result;
}

double trigamma(double x) {
  if (!(x > 0.0)) fail(ErrorKind::Domain, "trigamma: argument must be positive");
  double result = 0.0;
  while (x < 10.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  result += 1.0 / x + f / 2.0 +
            f / x *
                (1.0 / 6 -
                 f * (1.0 / 30 -
                      f * (1.0 / 42 -
                           f * (1.0 / 30 - f * (5.0 / 66 - f * (691.0 / 2730 - f * 7.0 / 6))))));
  return result;
}

double log_beta(double a, double b) {
  const double small = std::min(a, b);
  const double big = std::max(a, b);
  if (big < kStirlingMin) return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  // ln Gamma(big) - ln Gamma(big + small) without forming either term.
  const double diff = -(big - 0.5) * std::log1p(small / big) - small * std::log(big + small) +
                      small + stirling_tail(big) - stirling_tail(big + small);
  if (small < kStirlingMin) return log_gamma(small) + diff;
  return diff + (small - 0.5) * std::log(small) - small + 0.5 * std::log(2.0 * std::numbers::pi) +
         stirling_tail(small);
}

double beta_pdf(double x, BetaParams params) {
  check_params(params, "beta_pdf");
  if (x < 0.0 || x > 1.0) return 0.0;
  if (x == 0.0) {
    if (params.p < 1.0) return std::numeric_limits<double>::infinity();
    return params.p == 1.0 ? std::exp(-log_beta(params.p, params.q)) : 0.0;
  }
  if (x == 1.0) {
    if (params.q < 1.0) return std::numeric_limits<double>::infinity();
    return params.q == 1.0 ? std::exp(-log_beta(params.p, params.q)) : 0.0;
  }
  return std::exp((params.p - 1.0) * std::log(x) + (params.q - 1.0) * std::log1p(-x) -
                  log_beta(params.p, params.q));
}

double beta_cdf(double x, BetaParams params) {
  check_params(params, "beta_cdf");
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::Domain, "beta_cdf: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double a = params.p;
  const double b = params.q;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return beta_front(x, 1.0 - x, a, b) * beta_continued_fraction(x, a, b) / a;
  }
  const double y = 1.0 - x;
  return 1.0 - beta_front(y, x, b, a) * beta_continued_fraction(y, b, a) / b;
}

namespace {

// Walks x one ulp at a time while that brings beta_cdf closer to u. Where
// the CDF is steep, neighbouring doubles differ by more than the target
// accuracy, so the last few ulps matter.
double polish_ulps(double x, double u, BetaParams params) {
  double err = std::fabs(beta_cdf(x, params) - u);
  for (double dir : {0.0, 1.0}) {
    for (int step = 0; step < 64; ++step) {
      const double cand = std::nextafter(x, dir);
      if (cand <= 0.0 || cand >= 1.0) break;
      const double cand_err = std::fabs(beta_cdf(cand, params) - u);
      if (!(cand_err < err)) break;
      x = cand;
      err = cand_err;
    }
  }
  return x;
}

}  // namespace

double beta_inv_cdf(double u, BetaParams params) {
  check_params(params, "beta_inv_cdf");
  if (!(u >= 0.0 && u <= 1.0)) fail(ErrorKind::Domain, "beta_inv_cdf: u outside [0, 1]");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  const double a = params.p;
  const double b = params.q;

  // Start at the mean, pulled into the relevant tail with the leading-order
  // tail expansions I_x ~ x^a / (a B) and 1 - I_x ~ (1-x)^b / (b B).
  const double mean = a / (a + b);
  const double lb = log_beta(a, b);
  double x = mean;
  const double lower_tail = std::exp((std::log(u) + std::log(a) + lb) / a);
  const double upper_tail = 1.0 - std::exp((std::log1p(-u) + std::log(b) + lb) / b);
  // Quantiles beyond the normal range are returned from the expansion directly.
  if (lower_tail < std::numeric_limits<double>::min()) return lower_tail;
  if (1.0 - upper_tail < kEps) return upper_tail;
  if (lower_tail < mean) x = lower_tail;
  if (upper_tail > mean) x = upper_tail;
  if (!(x > 0.0 && x < 1.0)) x = mean;

  double lo = 0.0;
  double hi = 1.0;
  double last_residual = std::numeric_limits<double>::infinity();
  bool bisect_next = false;
  constexpr int kMaxIter = 200;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const double f = beta_cdf(x, params) - u;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next;
    const double density = beta_pdf(x, params);
    const bool stalled = std::fabs(f) > 0.5 * last_residual;
    // Geometric midpoint when the bracket spans orders of magnitude.
    const double mid = (lo > 0.0 && hi > 4.0 * lo) ? std::sqrt(lo * hi)
                       : (lo == 0.0 && hi < 1e-3) ? 0.0625 * hi
                                                  : 0.5 * (lo + hi);
    if (bisect_next || !(density > 0.0) || !std::isfinite(density)) {
      next = mid;
    } else {
      next = x - f / density;
      if (!(next > lo && next < hi)) next = mid;
    }
    bisect_next = stalled && iter > 2;
    last_residual = std::fabs(f);
    if (std::fabs(next - x) <= 4.0 * kEps * x || hi - lo <= 4.0 * kEps * x) {
      return polish_ulps(next, u, params);
    }
    x = next;
  }
  fail(ErrorKind::Numerical, "beta_inv_cdf: no convergence after 200 iterations");
}

namespace {

struct LogMeans {
  double l1 = 0.0;  // mean ln w
  double l2 = 0.0;  // mean ln (1 - w)
  double mean = 0.0;
  double var = 0.0;
};

LogMeans summarize_unit_sample(std::span<const double> w, const char* who) {
  if (w.size() < 10) {
    fail(ErrorKind::Fit, std::string(who) + ": at least 10 samples are required");
  }
  LogMeans s;
  for (double v : w) {
    if (!(v > 0.0 && v < 1.0)) {
      fail(ErrorKind::Domain, std::string(who) + ": samples must lie strictly inside (0, 1)");
    }
    s.l1 += std::log(v);
    s.l2 += std::log1p(-v);
    s.mean += v;
  }
  const double n = static_cast<double>(w.size());
  s.l1 /= n;
  s.l2 /= n;
  s.mean /= n;
  for (double v : w) s.var += (v - s.mean) * (v - s.mean);
  s.var /= n;
  if (!(s.var > 0.0)) fail(ErrorKind::Fit, std::string(who) + ": samples have zero variance");
  return s;
}

BetaParams moments_estimate(const LogMeans& s) {
  const double c = s.mean * (1.0 - s.mean) / s.var - 1.0;
  if (c > 0.0) return {s.mean * c, (1.0 - s.mean) * c};
  // Variance at or above the Bernoulli bound: start from a U-shaped guess.
  return {0.5 * s.mean, 0.5 * (1.0 - s.mean)};
}

double beta_mean_loglik(BetaParams bp, const LogMeans& s) {
  return (bp.p - 1.0) * s.l1 + (bp.q - 1.0) * s.l2 - log_beta(bp.p, bp.q);
}

}  // namespace

BetaParams beta_fit(std::span<const double> samples) {
  const LogMeans s = summarize_unit_sample(samples, "beta_fit");
  const BetaParams start = moments_estimate(s);
  BetaParams cur = start;
  double ll = beta_mean_loglik(cur, s);
  // The Beta log-likelihood is concave in (p, q); damped Newton converges.
  for (int iter = 0; iter < 200; ++iter) {
    const double psi_pq = digamma(cur.p + cur.q);
    const double g1 = s.l1 - digamma(cur.p) + psi_pq;
    const double g2 = s.l2 - digamma(cur.q) + psi_pq;
    const double t_pq = trigamma(cur.p + cur.q);
    // Negative Hessian (positive definite).
    const double h11 = trigamma(cur.p) - t_pq;
    const double h22 = trigamma(cur.q) - t_pq;
    const double h12 = -t_pq;
    const double det = h11 * h22 - h12 * h12;
    if (!(det > 0.0) || !std::isfinite(det)) break;
    const double dp = (h22 * g1 - h12 * g2) / det;
    const double dq = (h11 * g2 - h12 * g1) / det;
    double step = 1.0;
    BetaParams next{};
    double next_ll = -std::numeric_limits<double>::infinity();
    for (int half = 0; half < 60; ++half, step *= 0.5) {
      next = {cur.p + step * dp, cur.q + step * dq};
      if (next.p > 0.0 && next.q > 0.0) {
        next_ll = beta_mean_loglik(next, s);
        if (next_ll >= ll) break;
      }
    }
    if (!(next.p > 0.0 && next.q > 0.0) || next_ll < ll) break;
    const double change = std::max(std::fabs(next.p - cur.p) / cur.p,
                                   std::fabs(next.q - cur.q) / cur.q);
    cur = next;
    ll = next_ll;
    if (change < 1e-13) return cur;
  }
  // Newton stalled: accept the iterate if the score is essentially zero.
  const double psi_pq = digamma(cur.p + cur.q);
  const double g1 = s.l1 - digamma(cur.p) + psi_pq;
  const double g2 = s.l2 - digamma(cur.q) + psi_pq;
  if (std::fabs(g1) < 1e-8 && std::fabs(g2) < 1e-8 && std::isfinite(ll)) return cur;
  return start;
}

BetaParams beta_fit_symmetric(std::span<const double> samples) {
  const LogMeans s = summarize_unit_sample(samples, "beta_fit_symmetric");
  const double target = 0.5 * (s.l1 + s.l2);
  // Solve psi(p) - psi(2p) = target; the left side increases monotonically in p.
  const BetaParams mom = moments_estimate(s);
  double p = std::max(0.5 * (mom.p + mom.q), 1e-3);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = digamma(p) - digamma(2.0 * p) - target;
    const double dg = trigamma(p) - 2.0 * trigamma(2.0 * p);
    double next = p - g / dg;
    if (!(next > 0.0)) next = 0.5 * p;
    if (std::fabs(next - p) <= 1e-14 * p) return {next, next};
    p = next;
  }
  fail(ErrorKind::Fit, "beta_fit_symmetric: Newton iteration did not converge");
}

double norm_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double norm_inv_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) fail(ErrorKind::Domain, "norm_inv_cdf: u must lie in (0, 1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;

  // Work in the lower half; 1 - u is exact for u >= 0.5.
  const bool upper = u > 0.5;
  const double p = upper ? 1.0 - u : u;
  double x;
  if (p < kLow) {
    const double t = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  } else {
    const double t = p - 0.5;
    const double r = t * t;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // Halley refinement on Phi(x) - p.
  const double e = norm_cdf(x) - p;
  const double h = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= h / (1.0 + 0.5 * x * h);
  return upper ? -x : x;
}

}  // namespace mevt
