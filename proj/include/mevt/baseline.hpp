#pragma once

// Extrapolation benchmark: a parametric distribution fitted to the whole
// channel sample supplies the tail probabilities that the tail model would
// otherwise provide. Everything after the margin transform is shared with
// the tail-model pipeline.

#include <span>
#include <string>
#include <vector>

#include "mevt/bivariate.hpp"
#include "mevt/rate.hpp"

namespace mevt {

enum class MarginFamily { Gaussian, Exponential, Lognormal };

const char* to_string(MarginFamily f) noexcept;
MarginFamily parse_margin_family(const std::string& text);

/// Fitted parametric margin. Parameters by family:
///   Gaussian:    location = mean, scale = standard deviation
///   Exponential: scale = mean power (Rayleigh fading on the amplitude)
///   Lognormal:   location, scale of ln x
struct ParametricMargin {
  MarginFamily family = MarginFamily::Gaussian;
  double location = 0.0;
  double scale = 1.0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n = 0;
  int k = 2;  // free parameters

  double cdf(double x) const;
};

/// Maximum-likelihood fits (n >= 30). Fit error on zero variance or, for the
/// positive families, non-positive samples.
ParametricMargin fit_gaussian(std::span<const double> x);
ParametricMargin fit_exponential(std::span<const double> x);
ParametricMargin fit_lognormal(std::span<const double> x);

struct MarginSelection {
  std::vector<ParametricMargin> candidates;  // in family order; failed fits omitted
  ParametricMargin chosen;                   // smallest AIC
};

/// Fits every family and keeps the smallest AIC. With `bulk_only` the fit
/// uses the samples at or above the 1e-3 empirical quantile.
MarginSelection select_margin(std::span<const double> x, bool bulk_only = false);

struct ExtrapolatedModel {
  ParametricMargin margin_x;
  ParametricMargin margin_y;
  AngularModel angular_ep;
  JointTailSample joint;
  FrechetPair frechet_ep;
  PickandsCoords pickands_ep;

  double max_r_ep() const noexcept { return pickands_ep.max_r; }
};

/// Frechet transform through the parametric CDFs, then the shared Pickands
/// and angular steps.
ExtrapolatedModel extrapolate_and_transform(const ParametricMargin& mx, const ParametricMargin& my,
                                            const JointTailSample& joint, bool symmetric = false);

/// Margins selected on (x, y), joint sample at the thresholds (ux, uy).
ExtrapolatedModel build_extrapolated(std::span<const double> x, std::span<const double> y,
                                     double ux, double uy, bool bulk_only = false,
                                     bool symmetric = false);

/// Same quantile chain as select_rate; an underflowing eps_n is flagged and
/// yields rate 0.
RateDecision baseline_rate(const ExtrapolatedModel& model, double eps, BetaParams test);

}  // namespace mevt
