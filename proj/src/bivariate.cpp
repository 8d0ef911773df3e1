#include "mevt/bivariate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mevt/error.hpp"
#include "mevt/simd.hpp"

namespace mevt {

JointTailSample joint_filter(std::span<const double> x, std::span<const double> y, double ux,
                             double uy) {
  if (x.size() != y.size()) {
    fail(ErrorKind::Argument, "joint_filter: sequences differ in length");
  }
  JointTailSample j;
  j.n = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < ux && y[i] < uy) {
      j.x_exceed.push_back(x[i]);
      j.y_exceed.push_back(y[i]);
      j.indices.push_back(i);
    }
  }
  if (j.indices.empty()) {
    fail(ErrorKind::EmptyTail, "joint_filter: no simultaneous exceedances below (" +
                                   std::to_string(ux) + ", " + std::to_string(uy) + ")");
  }
  return j;
}

JointTailSample joint_filter(const IidSequence& x, const IidSequence& y, double ux, double uy) {
  return joint_filter(x.values, y.values, ux, uy);
}

double frechet_from_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorKind::Transform, "Frechet transform: probability outside (0, 1)");
  }
  return -1.0 / std::log1p(-p);
}

FrechetPair frechet_from_probabilities(const JointTailSample& joint,
                                       const std::function<double(double)>& prob_x,
                                       const std::function<double(double)>& prob_y) {
  FrechetPair fr;
  fr.n = joint.n;
  fr.x_tilde.resize(joint.size());
  fr.y_tilde.resize(joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const double px = prob_x(joint.x_exceed[i]);
    const double py = prob_y(joint.y_exceed[i]);
    if (!(px > 0.0 && px < 1.0) || !(py > 0.0 && py < 1.0)) {
      throw TransformError(joint.indices[i],
                           "Frechet transform: logarithm argument out of range at sample " +
                               std::to_string(joint.indices[i]) +
                               " (value outside the fitted tail support)");
    }
    fr.x_tilde[i] = -1.0 / std::log1p(-px);
    fr.y_tilde[i] = -1.0 / std::log1p(-py);
  }
  return fr;
}

FrechetPair frechet_transform(const JointTailSample& joint, const TailModel& mx,
                              const TailModel& my) {
  return frechet_from_probabilities(
      joint, [&](double x) { return tail_probability(mx, x); },
      [&](double y) { return tail_probability(my, y); });
}

PickandsCoords pickands_transform(const FrechetPair& fr) {
  if (fr.n == 0) fail(ErrorKind::Argument, "pickands_transform: n must be positive");
  if (fr.x_tilde.size() != fr.y_tilde.size()) {
    fail(ErrorKind::Argument, "pickands_transform: Frechet sequences differ in length");
  }
  PickandsCoords pk;
  const std::size_t m = fr.x_tilde.size();
  pk.r.resize(m);
  pk.omega.resize(m);
  simd::pickands(fr.x_tilde, fr.y_tilde, static_cast<double>(fr.n), pk.r, pk.omega);
  pk.max_r = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    if (!(pk.r[i] < 0.0) || !std::isfinite(pk.r[i])) {
      throw TransformError(i, "pickands_transform: radial component is zero or not finite at " +
                                  std::to_string(i));
    }
    pk.max_r = std::max(pk.max_r, pk.r[i]);
  }
  if (m > 0) {
    pk.clamp_eps = 1.0 / (2.0 * static_cast<double>(m));
    for (double w : pk.omega) {
      if (w < pk.clamp_eps || w > 1.0 - pk.clamp_eps) ++pk.clamped_count;
    }
  }
  return pk;
}

std::vector<double> clamped_omega(const PickandsCoords& pk) {
  std::vector<double> w(pk.omega);
  for (double& v : w) v = std::clamp(v, pk.clamp_eps, 1.0 - pk.clamp_eps);
  return w;
}

AngularModel fit_angular(const PickandsCoords& pk, bool symmetric) {
  if (pk.size() < 10) {
    fail(ErrorKind::Fit, "fit_angular: " + std::to_string(pk.size()) +
                             " angular samples (at least 10 required)");
  }
  const std::vector<double> w = clamped_omega(pk);
  AngularModel a;
  a.symmetric = symmetric;
  a.count = w.size();
  a.beta = symmetric ? beta_fit_symmetric(w) : beta_fit(w);
  double s = 0.0;
  for (double v : pk.omega) s += v;
  a.mean_omega = s / static_cast<double>(pk.size());
  a.mean_constraint_deviation = std::fabs(a.mean_omega - 0.5);
  if (a.mean_constraint_deviation > kMeanConstraintWarning) {
    a.warnings.emplace_back("angular mean deviates from 1/2 by more than 0.05");
  }
  if (pk.clamped_count > 0) {
    a.warnings.emplace_back(std::to_string(pk.clamped_count) +
                            " angular samples clamped away from the endpoints");
  }
  return a;
}

DependenceModel build_dependence(FrechetPair frechet, bool symmetric) {
  DependenceModel d;
  d.frechet = std::move(frechet);
  d.pickands = pickands_transform(d.frechet);
  d.angular = fit_angular(d.pickands, symmetric);
  return d;
}

BgpdModel build_bgpd(std::span<const double> x, std::span<const double> y, const TailModel& tx,
                     const TailModel& ty, bool symmetric) {
  JointTailSample joint = joint_filter(x, y, tx.threshold_u, ty.threshold_u);
  DependenceModel d = build_dependence(frechet_transform(joint, tx, ty), symmetric);
  BgpdModel m;
  m.joint = std::move(joint);
  m.tail_x = tx;
  m.tail_y = ty;
  m.angular = std::move(d.angular);
  m.frechet = std::move(d.frechet);
  m.pickands = std::move(d.pickands);
  m.n = m.joint.n;
  return m;
}

BgpdModel build_bgpd(std::span<const double> x, std::span<const double> y, double ux, double uy,
                     bool symmetric) {
  return build_bgpd(x, y, fit_gpd(x, ux), fit_gpd(y, uy), symmetric);
}

double bgpd_lambda(BetaParams angular, double max_r, double x_tilde, double y_tilde) {
  if (!(x_tilde > 0.0) || !(y_tilde > 0.0) || !std::isfinite(x_tilde) ||
      !std::isfinite(y_tilde)) {
    fail(ErrorKind::Domain, "bgpd: Frechet coordinates must be finite and positive");
  }
  const double omega = x_tilde / (x_tilde + y_tilde);
  if (!(max_r < 0.0)) fail(ErrorKind::Domain, "bgpd: max_r must be negative");
  return -2.0 * beta_cdf(omega, angular) / max_r;
}

double bgpd_lambda(const BgpdModel& model, double x_tilde, double y_tilde) {
  return bgpd_lambda(model.angular.beta, model.max_r(), x_tilde, y_tilde);
}

double bgpd_cdf(const BgpdModel& model, double x_tilde, double y_tilde) {
  return std::exp(-bgpd_lambda(model, x_tilde, y_tilde));
}

double bgpd_cdf_omega(BetaParams angular, double max_r, double omega) {
  if (!(max_r < 0.0)) fail(ErrorKind::Domain, "bgpd: max_r must be negative");
  return std::exp(2.0 * beta_cdf(omega, angular) / max_r);
}

}  // namespace mevt
