#include "mevt/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "mevt/error.hpp"
#include "mevt/specfun.hpp"
#include "mevt/stats.hpp"

namespace mevt {

const char* to_string(MarginFamily f) noexcept {
  switch (f) {
    case MarginFamily::Gaussian: return "gaussian";
    case MarginFamily::Exponential: return "exponential";
    case MarginFamily::Lognormal: return "lognormal";
  }
  return "?";
}

MarginFamily parse_margin_family(const std::string& text) {
  if (text == "gaussian") return MarginFamily::Gaussian;
  if (text == "exponential") return MarginFamily::Exponential;
  if (text == "lognormal") return MarginFamily::Lognormal;
  fail(ErrorKind::Argument, "unknown margin family '" + text + "'");
}

double ParametricMargin::cdf(double x) const {
  switch (family) {
    case MarginFamily::Gaussian: return norm_cdf((x - location) / scale);
    case MarginFamily::Exponential: return x <= 0.0 ? 0.0 : -std::expm1(-x / scale);
    case MarginFamily::Lognormal:
      return x <= 0.0 ? 0.0 : norm_cdf((std::log(x) - location) / scale);
  }
  return 0.0;
}

namespace {

void check_size(std::span<const double> x, const char* who) {
  if (x.size() < 30) fail(ErrorKind::Fit, std::string(who) + ": at least 30 samples required");
}

void check_positive(std::span<const double> x, const char* who) {
  for (double v : x) {
    if (!(v > 0.0)) fail(ErrorKind::Fit, std::string(who) + ": non-positive sample");
  }
}

void finish(ParametricMargin& m) {
  const double n = static_cast<double>(m.n);
  m.aic = 2.0 * m.k - 2.0 * m.loglik;
  m.bic = m.k * std::log(n) - 2.0 * m.loglik;
}

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

}  // namespace

ParametricMargin fit_gaussian(std::span<const double> x) {
  check_size(x, "fit_gaussian");
  ParametricMargin m;
  m.family = MarginFamily::Gaussian;
  m.n = x.size();
  m.location = mean(x);
  const double var = variance(x);
  if (!(var > 0.0)) fail(ErrorKind::Fit, "fit_gaussian: zero variance");
  m.scale = std::sqrt(var);
  const double n = static_cast<double>(m.n);
  m.loglik = -n * (std::log(m.scale) + kLogSqrt2Pi + 0.5);
  finish(m);
  return m;
}

ParametricMargin fit_exponential(std::span<const double> x) {
  check_size(x, "fit_exponential");
  check_positive(x, "fit_exponential");
  ParametricMargin m;
  m.family = MarginFamily::Exponential;
  m.k = 1;
  m.n = x.size();
  m.scale = mean(x);
  const double n = static_cast<double>(m.n);
  m.loglik = -n * (std::log(m.scale) + 1.0);
  finish(m);
  return m;
}

ParametricMargin fit_lognormal(std::span<const double> x) {
  check_size(x, "fit_lognormal");
  check_positive(x, "fit_lognormal");
  std::vector<double> lx(x.size());
  double sum_log = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx[i] = std::log(x[i]);
    sum_log += lx[i];
  }
  ParametricMargin m;
  m.family = MarginFamily::Lognormal;
  m.n = x.size();
  m.location = mean(lx);
  const double var = variance(lx);
  if (!(var > 0.0)) fail(ErrorKind::Fit, "fit_lognormal: zero variance");
  m.scale = std::sqrt(var);
  const double n = static_cast<double>(m.n);
  m.loglik = -sum_log - n * (std::log(m.scale) + kLogSqrt2Pi + 0.5);
  finish(m);
  return m;
}

MarginSelection select_margin(std::span<const double> x, bool bulk_only) {
  std::vector<double> data(x.begin(), x.end());
  if (bulk_only) {
    const double q = empirical_quantile(x, 1e-3);
    std::erase_if(data, [q](double v) { return v < q; });
  }
  MarginSelection s;
  for (auto fit : {fit_gaussian, fit_exponential, fit_lognormal}) {
    try {
      s.candidates.push_back(fit(data));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Fit) throw;
    }
  }
  if (s.candidates.empty()) fail(ErrorKind::Fit, "select_margin: no candidate family could be fitted");
  s.chosen = *std::min_element(s.candidates.begin(), s.candidates.end(),
                               [](const auto& a, const auto& b) { return a.aic < b.aic; });
  return s;
}

ExtrapolatedModel extrapolate_and_transform(const ParametricMargin& mx, const ParametricMargin& my,
                                            const JointTailSample& joint, bool symmetric) {
  ExtrapolatedModel m;
  m.margin_x = mx;
  m.margin_y = my;
  m.joint = joint;
  DependenceModel d = build_dependence(
      frechet_from_probabilities(
          joint, [&](double v) { return mx.cdf(v); }, [&](double v) { return my.cdf(v); }),
      symmetric);
  m.frechet_ep = std::move(d.frechet);
  m.pickands_ep = std::move(d.pickands);
  m.angular_ep = std::move(d.angular);
  return m;
}

ExtrapolatedModel build_extrapolated(std::span<const double> x, std::span<const double> y,
                                     double ux, double uy, bool bulk_only, bool symmetric) {
  const ParametricMargin mx = select_margin(x, bulk_only).chosen;
  const ParametricMargin my = select_margin(y, bulk_only).chosen;
  return extrapolate_and_transform(mx, my, joint_filter(x, y, ux, uy), symmetric);
}

RateDecision baseline_rate(const ExtrapolatedModel& model, double eps, BetaParams test) {
  return rate_chain(model.angular_ep.beta, model.max_r_ep(), test, eps, "extrapolated");
}

}  // namespace mevt
