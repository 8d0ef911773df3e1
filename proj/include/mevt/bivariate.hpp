#pragma once

// Joint lower-tail model of two channels: simultaneous exceedances, the
// Frechet margin transform, Pickands pseudo-polar coordinates, the Beta
// angular measure and the point-process bivariate tail CDF.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mevt/specfun.hpp"
#include "mevt/tail_fit.hpp"
#include "mevt/trace.hpp"

namespace mevt {

struct JointTailSample {
  std::vector<double> x_exceed;  // tail values of channel X (x < u_x)
  std::vector<double> y_exceed;  // matched values of channel Y (y < u_y)
  std::vector<std::size_t> indices;
  std::size_t n = 0;  // length of the sequences the pairs came from

  std::size_t size() const noexcept { return indices.size(); }
};

/// Pairs with x_i < u_x and y_i < u_y. EmptyTail error when there are none.
JointTailSample joint_filter(std::span<const double> x, std::span<const double> y, double ux,
                             double uy);
JointTailSample joint_filter(const IidSequence& x, const IidSequence& y, double ux, double uy);

struct FrechetPair {
  std::vector<double> x_tilde;  // positive
  std::vector<double> y_tilde;
  std::size_t n = 0;
};

/// Unit-Frechet value -1 / ln(1 - p) of a lower-tail probability p in (0, 1).
double frechet_from_probability(double p);

/// Frechet transform of tail values with margin probabilities P(X < x).
/// TransformError naming the first pair whose probability is not in (0, 1).
FrechetPair frechet_from_probabilities(const JointTailSample& joint,
                                       const std::function<double(double)>& prob_x,
                                       const std::function<double(double)>& prob_y);

/// Frechet transform through the fitted tails: p = zeta * survival(u - x).
FrechetPair frechet_transform(const JointTailSample& joint, const TailModel& mx,
                              const TailModel& my);

struct PickandsCoords {
  std::vector<double> r;      // -x~/n - y~/n, negative
  std::vector<double> omega;  // (-x~/n) / r, unclamped
  double max_r = 0.0;         // the radial value closest to zero
  double clamp_eps = 0.0;     // 1 / (2 count)
  std::size_t clamped_count = 0;  // omegas moved by the endpoint clamp

  std::size_t size() const noexcept { return r.size(); }
};

PickandsCoords pickands_transform(const FrechetPair& fr);

/// Angular samples clamped to [clamp_eps, 1 - clamp_eps] for the Beta fit.
std::vector<double> clamped_omega(const PickandsCoords& pk);

struct AngularModel {
  BetaParams beta;
  double mean_omega = 0.5;
  double mean_constraint_deviation = 0.0;  // |mean_omega - 0.5|
  bool symmetric = false;                  // fitted with p == q
  std::size_t count = 0;
  std::vector<std::string> warnings;
};

inline constexpr double kMeanConstraintWarning = 0.05;

/// Beta maximum-likelihood fit of the clamped angular samples (at least 10).
AngularModel fit_angular(const PickandsCoords& pk, bool symmetric = false);

/// Frechet + Pickands + angular fit of one joint sample.
struct DependenceModel {
  FrechetPair frechet;
  PickandsCoords pickands;
  AngularModel angular;
};

DependenceModel build_dependence(FrechetPair frechet, bool symmetric = false);

struct BgpdModel {
  TailModel tail_x;
  TailModel tail_y;
  AngularModel angular;
  JointTailSample joint;
  FrechetPair frechet;
  PickandsCoords pickands;
  std::size_t n = 0;

  double max_r() const noexcept { return pickands.max_r; }
};

/// Tails fitted at (ux, uy), then the joint model on the simultaneous exceedances.
BgpdModel build_bgpd(std::span<const double> x, std::span<const double> y, double ux, double uy,
                     bool symmetric = false);

/// Assembles the joint model from already fitted tails.
BgpdModel build_bgpd(std::span<const double> x, std::span<const double> y, const TailModel& tx,
                     const TailModel& ty, bool symmetric = false);

/// Lambda = -2 H(omega) / max_r with omega = x~ / (x~ + y~).
double bgpd_lambda(BetaParams angular, double max_r, double x_tilde, double y_tilde);
double bgpd_lambda(const BgpdModel& model, double x_tilde, double y_tilde);

/// G = exp(-Lambda), in (0, 1].
double bgpd_cdf(const BgpdModel& model, double x_tilde, double y_tilde);

/// G at an angular coordinate directly.
double bgpd_cdf_omega(BetaParams angular, double max_r, double omega);

}  // namespace mevt
