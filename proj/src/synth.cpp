#include "mevt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mevt/error.hpp"
#include "mevt/parallel.hpp"
#include "mevt/rng.hpp"
#include "mevt/specfun.hpp"
#include "mevt/tail_fit.hpp"

namespace mevt {

const char* to_string(SynthMarginFamily f) noexcept {
  switch (f) {
    case SynthMarginFamily::GpdGaussian: return "gpd_gaussian";
    case SynthMarginFamily::Gaussian: return "gaussian";
    case SynthMarginFamily::Lognormal: return "lognormal";
  }
  return "?";
}

const char* to_string(DependenceFamily f) noexcept {
  switch (f) {
    case DependenceFamily::Independent: return "independent";
    case DependenceFamily::GaussianCopula: return "gaussian_copula";
    case DependenceFamily::Logistic: return "logistic";
  }
  return "?";
}

double SynthMargin::cdf(double x) const {
  switch (family) {
    case SynthMarginFamily::Gaussian: return norm_cdf((x - mu) / s);
    case SynthMarginFamily::Lognormal: return x <= 0.0 ? 0.0 : norm_cdf((std::log(x) - mu) / s);
    case SynthMarginFamily::GpdGaussian: {
      if (x < u) return zeta * gpd_survival({sigma, xi}, u - x);
      // upper-tail form keeps precision in the bulk
      const double tail_a = norm_cdf((mu - u) / s);
      const double tail_x = norm_cdf((mu - x) / s);
      return zeta + (1.0 - zeta) * (1.0 - tail_x / tail_a);
    }
  }
  return 0.0;
}

double SynthMargin::quantile(double v) const {
  switch (family) {
    case SynthMarginFamily::Gaussian: return mu + s * norm_inv_cdf(v);
    case SynthMarginFamily::Lognormal: return std::exp(mu + s * norm_inv_cdf(v));
    case SynthMarginFamily::GpdGaussian: {
      if (v < zeta) {
        const double t = std::log(v / zeta);  // log survival, < 0
        const double e = std::fabs(xi) < 1e-12 ? -sigma * t : sigma * std::expm1(-xi * t) / xi;
        return u - e;
      }
      // conditional bulk: upper-tail probability of the Gaussian
      const double tail_a = norm_cdf((mu - u) / s);
      const double tail = (1.0 - v) / (1.0 - zeta) * tail_a;
      return mu - s * norm_inv_cdf(std::clamp(tail, 1e-300, tail_a));
    }
  }
  return 0.0;
}

void validate(const SynthSpec& spec) {
  auto check_margin = [](const SynthMargin& m, const char* name) {
    const std::string who = std::string("synth ") + name + ": ";
    if (!(m.s > 0.0) || !std::isfinite(m.mu)) fail(ErrorKind::Argument, who + "invalid mu/s");
    switch (m.family) {
      case SynthMarginFamily::Gaussian:
        if (!(m.mu - 8.0 * m.s > 0.0)) {
          fail(ErrorKind::Argument, who + "Gaussian margin needs mu > 8 s (positive powers)");
        }
        break;
      case SynthMarginFamily::Lognormal: break;
      case SynthMarginFamily::GpdGaussian:
        if (!(m.zeta > 0.0 && m.zeta < 1.0)) fail(ErrorKind::Argument, who + "zeta outside (0, 1)");
        if (!(m.sigma > 0.0)) fail(ErrorKind::Argument, who + "sigma must be positive");
        if (!(m.xi < 0.0 && m.xi > -1.0)) {
          fail(ErrorKind::Argument, who + "xi must lie in (-1, 0) so the tail ends above 0 mW");
        }
        if (!(m.u + m.sigma / m.xi > 0.0)) {
          fail(ErrorKind::Argument, who + "GPD support reaches non-positive powers (u < -sigma/xi)");
        }
        break;
    }
  };
  check_margin(spec.margin_x, "margin_x");
  check_margin(spec.margin_y, "margin_y");
  if (spec.dependence == DependenceFamily::GaussianCopula && !(std::fabs(spec.rho) < 1.0)) {
    fail(ErrorKind::Argument, "synth: rho must lie in (-1, 1)");
  }
  if (spec.dependence == DependenceFamily::Logistic && !(spec.theta > 0.0 && spec.theta <= 1.0)) {
    fail(ErrorKind::Argument, "synth: logistic theta must lie in (0, 1]");
  }
  if (spec.n_total == 0) fail(ErrorKind::Argument, "synth: n_total must be positive");
}

namespace {

// Positive stable variate with Laplace transform exp(-t^alpha) (Kanter).
double positive_stable(Rng& rng, double alpha) {
  if (alpha >= 1.0) return 1.0;
  const double w = std::numbers::pi * rng.uniform_open();
  const double e = rng.exponential();
  return std::sin(alpha * w) / std::pow(std::sin(w), 1.0 / alpha) *
         std::pow(std::sin((1.0 - alpha) * w) / e, (1.0 - alpha) / alpha);
}

// Uniform pair (lower-tail orientation) from the dependence family.
std::pair<double, double> draw_uniforms(const SynthSpec& spec, Rng& rng) {
  switch (spec.dependence) {
    case DependenceFamily::Independent: {
      const double a = rng.uniform_open();
      return {a, rng.uniform_open()};
    }
    case DependenceFamily::GaussianCopula: {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      const double w = spec.rho * z1 + std::sqrt(1.0 - spec.rho * spec.rho) * z2;
      return {norm_cdf(z1), norm_cdf(w)};
    }
    case DependenceFamily::Logistic: {
      const double st = positive_stable(rng, spec.theta);
      const double e1 = rng.exponential();
      const double e2 = rng.exponential();
      // extreme-value copula pair V = exp(-(E/S)^theta), mirrored: U = 1 - V
      const double a = -std::expm1(-std::pow(e1 / st, spec.theta));
      const double b = -std::expm1(-std::pow(e2 / st, spec.theta));
      return {std::clamp(a, 1e-300, 1.0 - 0x1p-53), std::clamp(b, 1e-300, 1.0 - 0x1p-53)};
    }
  }
  return {0.5, 0.5};
}

}  // namespace

std::pair<PowerTrace, PowerTrace> generate(const SynthSpec& spec, unsigned threads) {
  validate(spec);
  PowerTrace x, y;
  x.receiver_id = "rx1";
  y.receiver_id = "rx2";
  x.source_unit = y.source_unit = Unit::Milliwatt;
  x.samples.resize(spec.n_total);
  y.samples.resize(spec.n_total);
  const std::size_t blocks = (spec.n_total + kSynthBlock - 1) / kSynthBlock;
  parallel_for(blocks, threads, [&](std::size_t k) {
    Rng rng(derive_seed(spec.seed, k));
    const std::size_t begin = k * kSynthBlock;
    const std::size_t end = std::min(spec.n_total, begin + kSynthBlock);
    for (std::size_t i = begin; i < end; ++i) {
      const auto [a, b] = draw_uniforms(spec, rng);
      x.samples[i] = spec.margin_x.quantile(a);
      y.samples[i] = spec.margin_y.quantile(b);
    }
  });
  return {std::move(x), std::move(y)};
}

namespace {

double bvn_density(double h, double k, double r) {
  const double one_m = 1.0 - r * r;
  return std::exp(-(h * h - 2.0 * r * h * k + k * k) / (2.0 * one_m)) /
         (2.0 * std::numbers::pi * std::sqrt(one_m));
}

double simpson(double h, double k, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth, bool& ok) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = bvn_density(h, k, lm);
  const double frm = bvn_density(h, k, rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) {
    ok = false;
    return left + right;
  }
  return simpson(h, k, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, ok) +
         simpson(h, k, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, ok);
}

// Plackett: Phi2(h, k; rho) = Phi(h) Phi(k) + int_0^rho phi2(h, k; r) dr.
double bvn_cdf(double h, double k, double rho) {
  const double base = norm_cdf(h) * norm_cdf(k);
  if (rho == 0.0) return base;
  const double f0 = bvn_density(h, k, 0.0);
  const double fm = bvn_density(h, k, 0.5 * rho);
  const double f1 = bvn_density(h, k, rho);
  const double whole = rho / 6.0 * (f0 + 4.0 * fm + f1);
  const double tol = std::max(1e-13 * base, 1e-300);
  bool ok = true;
  const double integral = simpson(h, k, 0.0, rho, f0, fm, f1, whole, tol, 60, ok);
  if (!ok) fail(ErrorKind::Numerical, "bivariate normal quadrature did not converge");
  return base + integral;
}

}  // namespace

double copula_cdf(const SynthSpec& spec, double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  if (a >= 1.0) return std::min(b, 1.0);
  if (b >= 1.0) return a;
  switch (spec.dependence) {
    case DependenceFamily::Independent: return a * b;
    case DependenceFamily::GaussianCopula:
      return bvn_cdf(norm_inv_cdf(a), norm_inv_cdf(b), spec.rho);
    case DependenceFamily::Logistic: {
      const double la = -std::log1p(-a);
      const double lb = -std::log1p(-b);
      const double t = 1.0 / spec.theta;
      const double big = std::max(la, lb);
      // (la^t + lb^t)^theta, scaled to avoid overflow
      const double A =
          big * std::pow(std::pow(la / big, t) + std::pow(lb / big, t), spec.theta);
      return std::max(0.0, a + b + std::expm1(-A));
    }
  }
  return 0.0;
}

double true_joint_tail_prob(const SynthSpec& spec, double x, double y) {
  return copula_cdf(spec, spec.margin_x.cdf(x), spec.margin_y.cdf(y));
}

}  // namespace mevt
