#include "mevt/gpd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mevt/error.hpp"
#include "mevt/simd.hpp"

namespace mevt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Power-series evaluation is used when |xi| is tiny relative to the data,
// where the closed forms lose digits to cancellation (A/xi^2 - B1/xi).
bool use_series(double xi, double y_max) {
  return std::fabs(xi) < 1e-3 && std::fabs(xi) * y_max <= 0.02;
}

bool in_domain(GpdParams p) {
  return p.sigma > 0.0 && std::isfinite(p.sigma) && p.xi > -1.0 && p.xi <= 1.0;
}

struct Sums {
  double a = 0.0;        // sum ln z
  double a_over = 0.0;   // A / xi (limit sum y as xi -> 0)
  double b1 = 0.0;       // sum y / z
  double b2 = 0.0;       // sum y^2 / z^2
  double c1 = 0.0;       // sum y / z^2
  double t = 0.0;        // A / xi^2 - B1 / xi
  double t_prime = 0.0;  // dT / dxi
};

// s[m-1] = sum y^m for m = 1..kPowers
Sums series_sums(const std::array<double, GpdData::kPowers>& s, double xi) {
  constexpr std::size_t M = GpdData::kPowers;
  Sums r;
  double xp = 1.0;  // xi^(m-1)
  for (std::size_t m = 1; m <= M; ++m) {
    const double sign = (m % 2 == 1) ? 1.0 : -1.0;
    r.a_over += sign * xp * s[m - 1] / static_cast<double>(m);
    xp *= xi;
  }
  r.a = xi * r.a_over;
  double nx = 1.0;  // (-xi)^j
  for (std::size_t j = 0; j + 1 <= M; ++j) {
    r.b1 += nx * s[j];
    r.c1 += static_cast<double>(j + 1) * nx * s[j];
    if (j + 2 <= M) r.b2 += static_cast<double>(j + 1) * nx * s[j + 1];
    nx *= -xi;
  }
  xp = 1.0;  // xi^(m-2)
  for (std::size_t m = 2; m <= M; ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const double dm = static_cast<double>(m);
    r.t += sign * xp * s[m - 1] * (dm - 1.0) / dm;
    xp *= xi;
  }
  xp = 1.0;  // xi^(m-3)
  for (std::size_t m = 3; m <= M; ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const double dm = static_cast<double>(m);
    r.t_prime += sign * (dm - 2.0) * xp * s[m - 1] * (dm - 1.0) / dm;
    xp *= xi;
  }
  return r;
}

void closed_form_tail(Sums& r, double xi) {
  r.a_over = r.a / xi;
  r.t = r.a / (xi * xi) - r.b1 / xi;
  r.t_prime = 2.0 * r.b1 / (xi * xi) - 2.0 * r.a / (xi * xi * xi) + r.b2 / xi;
}

GpdDerivatives assemble(const Sums& r, double k, GpdParams p) {
  GpdDerivatives d;
  const double s = p.sigma;
  const double x1 = p.xi + 1.0;
  d.loglik = -k * std::log(s) - r.a - r.a_over;
  d.d_sigma = (-k + x1 * r.b1) / s;
  d.d_xi = r.t - r.b1;
  d.d_sigma_sigma = (k - x1 * (r.b1 + r.c1)) / (s * s);
  d.d_sigma_xi = (r.b1 - x1 * r.b2) / s;
  d.d_xi_xi = r.t_prime + r.b2;
  d.feasible = std::isfinite(d.loglik);
  return d;
}

std::array<double, GpdData::kPowers> scaled_powers(const GpdData& data, double sigma) {
  std::array<double, GpdData::kPowers> s{};
  double f = 1.0;
  for (std::size_t m = 0; m < GpdData::kPowers; ++m) {
    f /= sigma;
    s[m] = data.powers()[m] * f;
  }
  return s;
}

}  // namespace

GpdData::GpdData(std::vector<double> exceedances) : e_(std::move(exceedances)) {
  for (double v : e_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorKind::Fit, "exceedances must be finite and non-negative");
    }
    max_ = std::max(max_, v);
  }
  simd::power_sums(e_, powers_);
}

double gpd_loglik(const GpdData& data, GpdParams p) {
  if (!in_domain(p)) return kNegInf;
  const double k = static_cast<double>(data.size());
  if (use_series(p.xi, data.max() / p.sigma)) {
    const auto s = scaled_powers(data, p.sigma);
    double a_over = 0.0;
    double xp = 1.0;
    for (std::size_t m = 1; m <= GpdData::kPowers; ++m) {
      const double sign = (m % 2 == 1) ? 1.0 : -1.0;
      a_over += sign * xp * s[m - 1] / static_cast<double>(m);
      xp *= p.xi;
    }
    return -k * std::log(p.sigma) - p.xi * a_over - a_over;
  }
  const auto t = simd::gpd_log_terms(data.values(), p.xi / p.sigma);
  if (!(t.min_z > 0.0)) return kNegInf;
  return -k * std::log(p.sigma) - (1.0 + 1.0 / p.xi) * t.log_sum;
}

GpdDerivatives gpd_derivatives(const GpdData& data, GpdParams p) {
  if (!in_domain(p)) return {};
  const double k = static_cast<double>(data.size());
  if (use_series(p.xi, data.max() / p.sigma)) {
    return assemble(series_sums(scaled_powers(data, p.sigma), p.xi), k, p);
  }
  const auto t = simd::gpd_terms(data.values(), 1.0 / p.sigma, p.xi);
  if (!(t.min_z > 0.0)) return {};
  Sums r;
  r.a = t.log_sum;
  r.b1 = t.ratio_sum;
  r.b2 = t.ratio2_sum;
  r.c1 = t.cross_sum;
  closed_form_tail(r, p.xi);
  return assemble(r, k, p);
}

GpdDerivatives gpd_point_derivatives(double e, GpdParams p) {
  if (!in_domain(p)) return {};
  const double y = e / p.sigma;
  if (use_series(p.xi, y)) {
    std::array<double, GpdData::kPowers> s{};
    double f = 1.0;
    for (double& v : s) {
      f *= y;
      v = f;
    }
    return assemble(series_sums(s, p.xi), 1.0, p);
  }
  const double z = 1.0 + p.xi * y;
  if (!(z > 0.0)) return {};
  Sums r;
  r.a = std::log1p(p.xi * y);
  r.b1 = y / z;
  r.b2 = r.b1 * r.b1;
  r.c1 = r.b1 / z;
  closed_form_tail(r, p.xi);
  return assemble(r, 1.0, p);
}

GpdParams gpd_pwm(std::span<const double> exceedances) {
  const std::size_t n = exceedances.size();
  if (n < 2) fail(ErrorKind::Fit, "PWM needs at least two exceedances");
  std::vector<double> v(exceedances.begin(), exceedances.end());
  std::sort(v.begin(), v.end());
  if (!(v.back() - v.front() > 1e-12 * v.back())) {
    fail(ErrorKind::Fit, "degenerate exceedances (all values equal)");
  }
  double a0 = 0.0;
  double a1 = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = (static_cast<double>(i + 1) - 0.35) / dn;
    a0 += v[i];
    a1 += (1.0 - pi) * v[i];
  }
  a0 /= dn;
  a1 /= dn;
  const double denom = a0 - 2.0 * a1;
  GpdParams p;
  if (denom > 0.0) {
    p.xi = -(a0 / denom - 2.0);
    p.sigma = 2.0 * a0 * a1 / denom;
  } else {
    p.xi = 0.5;
    p.sigma = a0 * 0.5;
  }
  p.xi = std::clamp(p.xi, -0.9, 0.9);
  if (!(p.sigma > 0.0)) p.sigma = a0;
  return p;
}

namespace {

struct NewtonOutcome {
  GpdParams params;
  double loglik = kNegInf;
  int iterations = 0;
  bool converged = false;
};

NewtonOutcome newton_polish(const GpdData& data, GpdParams start, int max_iter) {
  NewtonOutcome out;
  out.params = start;
  GpdDerivatives d = gpd_derivatives(data, start);
  if (!d.feasible) return out;
  out.loglik = d.loglik;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    const double det = d.d_sigma_sigma * d.d_xi_xi - d.d_sigma_xi * d.d_sigma_xi;
    if (!(d.d_sigma_sigma < 0.0 && det > 0.0)) return out;
    const double ds = -(d.d_xi_xi * d.d_sigma - d.d_sigma_xi * d.d_xi) / det;
    const double dx = -(d.d_sigma_sigma * d.d_xi - d.d_sigma_xi * d.d_sigma) / det;
    if (!std::isfinite(ds) || !std::isfinite(dx)) return out;
    double step = 1.0;
    bool accepted = false;
    GpdParams cand{};
    double cand_ll = kNegInf;
    const double slack = 1e-12 * (1.0 + std::fabs(d.loglik));
    for (int half = 0; half < 40; ++half, step *= 0.5) {
      cand = {out.params.sigma + step * ds, out.params.xi + step * dx};
      cand_ll = gpd_loglik(data, cand);
      if (cand_ll >= d.loglik - slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return out;
    const bool small_step =
        std::fabs(step * ds) <= 1e-11 * out.params.sigma && std::fabs(step * dx) <= 1e-11;
    out.params = cand;
    out.loglik = cand_ll;
    if (small_step) {
      out.converged = true;
      return out;
    }
    d = gpd_derivatives(data, cand);
    if (!d.feasible) return out;
  }
  return out;
}

struct Simplex {
  std::array<std::array<double, 2>, 3> v;
  std::array<double, 3> f;
};

}  // namespace

GpdFit gpd_mle(const GpdData& data) {
  if (data.size() < 2) fail(ErrorKind::Fit, "GPD fit needs exceedances");
  GpdParams start = gpd_pwm(data.values());
  if (start.xi < 0.0 && 1.0 + start.xi * data.max() / start.sigma <= 0.0) {
    start.sigma = -start.xi * data.max() * 1.05;
  }
  GpdFit fit;
  fit.start_loglik = gpd_loglik(data, start);
  if (!std::isfinite(fit.start_loglik)) fail(ErrorKind::Fit, "infeasible GPD start point");

  // Nelder-Mead minimizing -loglik over v = (log sigma, xi).
  const auto objective = [&](const std::array<double, 2>& v) {
    const double ll = gpd_loglik(data, {std::exp(v[0]), v[1]});
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };
  Simplex s;
  s.v[0] = {std::log(start.sigma), start.xi};
  s.v[1] = {s.v[0][0] + 0.1, s.v[0][1]};
  s.v[2] = {s.v[0][0], start.xi + 0.1 <= 1.0 ? start.xi + 0.1 : start.xi - 0.1};
  for (int i = 0; i < 3; ++i) s.f[i] = objective(s.v[i]);

  bool nm_converged = false;
  int iter = 0;
  constexpr int kMaxIter = 5000;
  for (; iter < kMaxIter; ++iter) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return s.f[a] < s.f[b]; });
    const auto best = s.v[idx[0]];
    const auto mid = s.v[idx[1]];
    const auto worst = s.v[idx[2]];
    const double fb = s.f[idx[0]];
    const double fm = s.f[idx[1]];
    const double fw = s.f[idx[2]];
    const double spread = std::max(std::fabs(fw - fb), std::fabs(fm - fb));
    double size = 0.0;
    for (int j = 0; j < 2; ++j) {
      size = std::max({size, std::fabs(mid[j] - best[j]), std::fabs(worst[j] - best[j])});
    }
    if (std::isfinite(fw) && spread <= 1e-12 * (1.0 + std::fabs(fb)) && size <= 1e-9) {
      nm_converged = true;
      break;
    }
    const std::array<double, 2> c{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
    const auto along = [&](double t) {
      return std::array<double, 2>{c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])};
    };
    const auto r = along(-1.0);
    const double fr = objective(r);
    if (fr < fb) {
      const auto e = along(-2.0);
      const double fe = objective(e);
      if (fe < fr) {
        s.v[idx[2]] = e;
        s.f[idx[2]] = fe;
      } else {
        s.v[idx[2]] = r;
        s.f[idx[2]] = fr;
      }
    } else if (fr < fm) {
      s.v[idx[2]] = r;
      s.f[idx[2]] = fr;
    } else {
      const bool outside = fr < fw;
      const auto k = along(outside ? -0.5 : 0.5);
      const double fk = objective(k);
      if (fk < (outside ? fr : fw)) {
        s.v[idx[2]] = k;
        s.f[idx[2]] = fk;
      } else {
        for (int j : {idx[1], idx[2]}) {
          s.v[j] = {best[0] + 0.5 * (s.v[j][0] - best[0]), best[1] + 0.5 * (s.v[j][1] - best[1])};
          s.f[j] = objective(s.v[j]);
        }
      }
    }
  }
  const int b = static_cast<int>(std::min_element(s.f.begin(), s.f.end()) - s.f.begin());
  fit.params = {std::exp(s.v[b][0]), s.v[b][1]};
  fit.loglik = -s.f[b];
  fit.iterations = iter;

  const NewtonOutcome polished = newton_polish(data, fit.params, 50);
  if (polished.converged && polished.loglik >= fit.loglik - 1e-9 * (1.0 + std::fabs(fit.loglik))) {
    fit.params = polished.params;
    fit.loglik = polished.loglik;
    fit.converged = true;
  } else {
    fit.converged = nm_converged;
  }
  fit.iterations += polished.iterations;
  if (!fit.converged) fail(ErrorKind::Fit, "GPD likelihood optimizer did not converge");
  if (!std::isfinite(fit.loglik)) fail(ErrorKind::Fit, "support violation at the GPD optimum");
  return fit;
}

std::optional<GpdFit> gpd_refit(const GpdData& data, GpdParams start) {
  const NewtonOutcome n = newton_polish(data, start, 50);
  if (n.converged) {
    GpdFit fit;
    fit.params = n.params;
    fit.loglik = n.loglik;
    fit.start_loglik = gpd_loglik(data, start);
    fit.iterations = n.iterations;
    fit.converged = true;
    return fit;
  }
  try {
    return gpd_mle(data);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<std::array<double, 3>> gpd_covariance(const GpdData& data, GpdParams params) {
  const auto d = gpd_derivatives(data, params);
  if (!d.feasible) return std::nullopt;
  const double det = d.d_sigma_sigma * d.d_xi_xi - d.d_sigma_xi * d.d_sigma_xi;
  if (!(d.d_sigma_sigma < 0.0 && det > 0.0)) return std::nullopt;
  return std::array<double, 3>{-d.d_xi_xi / det, -d.d_sigma_sigma / det, d.d_sigma_xi / det};
}

}  // namespace mevt
