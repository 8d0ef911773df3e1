#include "mevt/tail_fit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "mevt/error.hpp"
#include "mevt/parallel.hpp"
#include "mevt/specfun.hpp"
#include "mevt/stats.hpp"

namespace mevt {

double TailModel::support_limit() const noexcept {
  return shape_xi < 0.0 ? -scale_sigma / shape_xi : std::numeric_limits<double>::infinity();
}

std::vector<double> exceedances(std::span<const double> x, double u) {
  std::vector<double> e;
  for (double v : x) {
    if (v < u) e.push_back(u - v);
  }
  return e;
}

TailModel fit_gpd(std::span<const double> x, double u) {
  std::vector<double> e = exceedances(x, u);
  if (e.size() < kMinExceedances) {
    fail(ErrorKind::Fit, "fit_gpd: only " + std::to_string(e.size()) +
                             " exceedances below the threshold (at least 30 required)");
  }
  const std::size_t k = e.size();
  const GpdData data(std::move(e));
  const GpdFit fit = gpd_mle(data);
  TailModel m;
  m.threshold_u = u;
  m.scale_sigma = fit.params.sigma;
  m.shape_xi = fit.params.xi;
  m.n_exceed = k;
  m.n_total = x.size();
  m.zeta = static_cast<double>(k) / static_cast<double>(x.size());
  m.log_likelihood = fit.loglik;
  if (const auto cov = gpd_covariance(data, fit.params)) {
    m.se_sigma = std::sqrt((*cov)[0]);
    m.se_xi = std::sqrt((*cov)[1]);
    m.cov_sigma_xi = (*cov)[2];
  } else {
    m.se_sigma = m.se_xi = m.cov_sigma_xi = std::numeric_limits<double>::quiet_NaN();
    m.warnings.emplace_back("observed information is not negative definite at the optimum");
  }
  if (m.shape_xi <= -0.5) {
    m.warnings.emplace_back("shape estimate <= -0.5: maximum-likelihood regularity fails");
  }
  return m;
}

TailModel fit_gpd(const IidSequence& seq, double u) { return fit_gpd(seq.values, u); }

TailModel with_params(const TailModel& model, GpdParams params) {
  TailModel m = model;
  m.scale_sigma = params.sigma;
  m.shape_xi = params.xi;
  m.warnings.clear();
  return m;
}

double gpd_survival(GpdParams p, double e) noexcept {
  if (e <= 0.0) return 1.0;
  if (std::fabs(p.xi) < 1e-6) return std::exp(-e / p.sigma);
  const double c = p.xi * e / p.sigma;
  if (!(c > -1.0)) return 0.0;
  return std::exp(-std::log1p(c) / p.xi);
}

double gpd_cdf(const TailModel& model, double x) {
  if (!(x <= model.threshold_u)) fail(ErrorKind::Domain, "gpd_cdf: x above the threshold");
  const double e = model.threshold_u - x;
  if (e > model.support_limit()) fail(ErrorKind::Domain, "gpd_cdf: x outside the GPD support");
  const GpdParams p = model.params();
  if (std::fabs(p.xi) < 1e-6) return -std::expm1(-e / p.sigma);
  const double c = p.xi * e / p.sigma;
  if (c <= -1.0) return 1.0;
  return -std::expm1(-std::log1p(c) / p.xi);
}

double gpd_quantile(const TailModel& model, double g) {
  if (!(g >= 0.0 && g <= 1.0)) fail(ErrorKind::Domain, "gpd_quantile: g outside [0, 1]");
  const GpdParams p = model.params();
  double e;
  if (std::fabs(p.xi) < 1e-6) {
    e = -p.sigma * std::log1p(-g);
  } else {
    e = p.sigma * std::expm1(-p.xi * std::log1p(-g)) / p.xi;
  }
  return model.threshold_u - e;
}

double tail_probability(const TailModel& model, double x) {
  if (!(x <= model.threshold_u)) fail(ErrorKind::Domain, "tail_probability: x above the threshold");
  return model.zeta * gpd_survival(model.params(), model.threshold_u - x);
}

std::vector<double> candidate_thresholds(std::span<const double> x, const ThresholdGrid& grid) {
  if (!grid.explicit_thresholds.empty()) {
    std::vector<double> t = grid.explicit_thresholds;
    std::sort(t.begin(), t.end());
    return t;
  }
  if (x.empty()) return {};
  if (grid.count == 0 || !(grid.level_min > 0.0) || !(grid.level_max < 1.0) ||
      grid.level_min > grid.level_max) {
    fail(ErrorKind::Argument, "invalid threshold grid");
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> t;
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double level =
        grid.count == 1 ? grid.level_min
                        : grid.level_min + (grid.level_max - grid.level_min) *
                                               static_cast<double>(i) /
                                               static_cast<double>(grid.count - 1);
    t.push_back(quantile_sorted(sorted, level));
  }
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Highest index j such that the mean-excess curve over points [0, j] is
// linear: R^2 above the bound, or every residual inside its band (a flat
// curve has R^2 near zero yet is perfectly linear).
std::optional<double> suggest_mrl(const std::vector<MrlPoint>& pts, const DiagnosticOptions& opt) {
  const std::size_t min_pts = std::max<std::size_t>(opt.min_points, 2);
  for (std::size_t m = pts.size(); m >= min_pts; --m) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sx += pts[i].threshold;
      sy += pts[i].mean_excess;
    }
    const double mx = sx / static_cast<double>(m);
    const double my = sy / static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double dx = pts[i].threshold - mx;
      const double dy = pts[i].mean_excess - my;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    double ssres = 0.0;
    bool within = true;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = pts[i].mean_excess - (my + slope * (pts[i].threshold - mx));
      ssres += r * r;
      within = within && std::fabs(r) <= pts[i].ci_halfwidth;
    }
    const double r2 = syy > 0.0 ? 1.0 - ssres / syy : 1.0;
    if (r2 >= opt.r2_min || within) return pts[m - 1].threshold;
  }
  return std::nullopt;
}

std::optional<double> suggest_stability(const std::vector<StabilityPoint>& pts) {
  for (std::size_t j = pts.size(); j-- > 0;) {
    bool ok = true;
    for (std::size_t i = 0; i <= j && ok; ++i) {
      ok = std::fabs(pts[i].xi - pts[j].xi) <= pts[i].xi_halfwidth &&
           std::fabs(pts[i].modified_scale - pts[j].modified_scale) <=
               pts[i].modified_scale_halfwidth;
    }
    if (ok) return pts[j].threshold;
  }
  return std::nullopt;
}

}  // namespace

ThresholdDiagnostics mrl_diagnostic(const IidSequence& seq, const ThresholdGrid& grid,
                                    const DiagnosticOptions& opt) {
  ThresholdDiagnostics d;
  d.candidate_thresholds = candidate_thresholds(seq.values, grid);
  const double z = norm_inv_cdf(1.0 - opt.alpha / 2.0);
  for (double u : d.candidate_thresholds) {
    const auto e = exceedances(seq.values, u);
    if (e.size() < kMinExceedances) {
      d.warnings.push_back("mean residual life: candidate " + fmt(u) + " dropped (" +
                           std::to_string(e.size()) + " exceedances < 30)");
      continue;
    }
    const double m = mean(e);
    double ss = 0.0;
    for (double v : e) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(e.size() - 1));
    d.mrl_curve.push_back({u, m, z * sd / std::sqrt(static_cast<double>(e.size())), e.size()});
  }
  d.mrl_suggested_u = suggest_mrl(d.mrl_curve, opt);
  d.suggested_u = d.mrl_suggested_u;
  return d;
}

ThresholdDiagnostics stability_diagnostic(const IidSequence& seq, const ThresholdGrid& grid,
                                          const DiagnosticOptions& opt) {
  ThresholdDiagnostics d;
  d.candidate_thresholds = candidate_thresholds(seq.values, grid);
  const double z = norm_inv_cdf(1.0 - opt.alpha / 2.0);
  const std::size_t n = d.candidate_thresholds.size();
  std::vector<std::optional<StabilityPoint>> slots(n);
  std::vector<std::string> errors(n);
  parallel_for(n, opt.threads, [&](std::size_t i) {
    const double u = d.candidate_thresholds[i];
    try {
      const TailModel m = fit_gpd(seq.values, u);
      if (!std::isfinite(m.se_xi) || !std::isfinite(m.se_sigma)) {
        errors[i] = "no standard errors";
        return;
      }
      StabilityPoint p;
      p.threshold = u;
      p.xi = m.shape_xi;
      p.xi_halfwidth = z * m.se_xi;
      p.modified_scale = m.scale_sigma + m.shape_xi * u;
      const double var = m.se_sigma * m.se_sigma + u * u * m.se_xi * m.se_xi +
                         2.0 * u * m.cov_sigma_xi;
      p.modified_scale_halfwidth = z * std::sqrt(std::max(var, 0.0));
      p.n_exceed = m.n_exceed;
      slots[i] = p;
    } catch (const Error& err) {
      errors[i] = err.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      d.stability_curves.push_back(*slots[i]);
    } else {
      d.warnings.push_back("parameter stability: candidate " + fmt(d.candidate_thresholds[i]) +
                           " dropped (" + errors[i] + ")");
    }
  }
  d.stability_suggested_u = suggest_stability(d.stability_curves);
  d.suggested_u = d.stability_suggested_u;
  return d;
}

ThresholdDiagnostics threshold_diagnostics(const IidSequence& seq, const ThresholdGrid& grid,
                                           const DiagnosticOptions& opt) {
  ThresholdDiagnostics d = mrl_diagnostic(seq, grid, opt);
  ThresholdDiagnostics s = stability_diagnostic(seq, grid, opt);
  d.stability_curves = std::move(s.stability_curves);
  d.stability_suggested_u = s.stability_suggested_u;
  d.warnings.insert(d.warnings.end(), s.warnings.begin(), s.warnings.end());
  if (d.mrl_suggested_u && d.stability_suggested_u) {
    d.suggested_u = std::min(*d.mrl_suggested_u, *d.stability_suggested_u);
  } else {
    d.suggested_u = d.mrl_suggested_u ? d.mrl_suggested_u : d.stability_suggested_u;
  }
  return d;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Argument, "cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_mrl_csv(const std::string& path, const ThresholdDiagnostics& diag) {
  auto out = open_csv(path);
  out << "threshold,mean_excess,ci_halfwidth,n_exceed\n";
  for (const auto& p : diag.mrl_curve) {
    out << fmt(p.threshold) << ',' << fmt(p.mean_excess) << ',' << fmt(p.ci_halfwidth) << ','
        << p.n_exceed << '\n';
  }
}

void write_stability_csv(const std::string& path, const ThresholdDiagnostics& diag) {
  auto out = open_csv(path);
  out << "threshold,xi,xi_halfwidth,modified_scale,modified_scale_halfwidth,n_exceed\n";
  for (const auto& p : diag.stability_curves) {
    out << fmt(p.threshold) << ',' << fmt(p.xi) << ',' << fmt(p.xi_halfwidth) << ','
        << fmt(p.modified_scale) << ',' << fmt(p.modified_scale_halfwidth) << ',' << p.n_exceed
        << '\n';
  }
}

FitDiagnostics validate_fit(const TailModel& model, std::span<const double> x, double bound) {
  FitDiagnostics d;
  d.bound = bound;
  std::vector<double> e = exceedances(x, model.threshold_u);
  std::sort(e.begin(), e.end());
  const std::size_t k = e.size();
  if (k == 0) return d;
  const GpdParams p = model.params();
  const double dk = static_cast<double>(k);
  d.pp_points.reserve(k);
  d.qq_points.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double g = 1.0 - gpd_survival(p, e[i]);
    const double emp = (static_cast<double>(i) + 0.5) / dk;
    d.pp_points.emplace_back(emp, g);
    d.qq_points.emplace_back(e[i], model.threshold_u - gpd_quantile(model, emp));
    d.max_pp_deviation = std::max({d.max_pp_deviation, static_cast<double>(i + 1) / dk - g,
                                   g - static_cast<double>(i) / dk});
  }
  d.passed = d.max_pp_deviation <= bound;
  return d;
}

FitDiagnostics validate_fit(const TailModel& model, const IidSequence& seq, double bound) {
  return validate_fit(model, seq.values, bound);
}

void write_fit_csv(const std::string& path, const FitDiagnostics& diag) {
  auto out = open_csv(path);
  out << "empirical_cdf,model_cdf,empirical_exceedance,model_exceedance\n";
  for (std::size_t i = 0; i < diag.pp_points.size(); ++i) {
    out << fmt(diag.pp_points[i].first) << ',' << fmt(diag.pp_points[i].second) << ','
        << fmt(diag.qq_points[i].first) << ',' << fmt(diag.qq_points[i].second) << '\n';
  }
}

}  // namespace mevt
