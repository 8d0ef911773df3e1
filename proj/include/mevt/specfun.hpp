#pragma once

// Special functions used across the pipeline: log-gamma and polygamma, the
// regularized incomplete beta function with its inverse, the standard normal
// CDF and quantile, and Beta maximum-likelihood fitting.

#include <span>

namespace mevt {

/// Shape parameters of a Beta distribution on [0, 1].
struct BetaParams {
  double p = 1.0;
  double q = 1.0;

  double mean() const noexcept { return p / (p + q); }
  bool valid() const noexcept { return p > 0.0 && q > 0.0; }

  friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

double log_gamma(double x);
double digamma(double x);
double trigamma(double x);
double log_beta(double a, double b);

double beta_pdf(double x, BetaParams params);

/// Regularized incomplete beta I_x(p, q). Throws Domain outside [0, 1].
double beta_cdf(double x, BetaParams params);

/// Inverse of beta_cdf in x. Safeguarded Newton iteration (density as the
/// derivative) with a bisection fallback; converges to a few ulps in x.
double beta_inv_cdf(double u, BetaParams params);

/// Maximum-likelihood Beta fit. Newton iteration on the digamma score from a
/// method-of-moments start; falls back to the moments estimate if the Newton
/// iteration fails. Samples must lie strictly inside (0, 1).
BetaParams beta_fit(std::span<const double> samples);

/// Maximum-likelihood fit constrained to p == q (mean exactly 1/2).
BetaParams beta_fit_symmetric(std::span<const double> samples);

double norm_pdf(double z) noexcept;
double norm_cdf(double z) noexcept;

/// Standard normal quantile, u in (0, 1). Rational approximation refined by
/// one Halley step.
double norm_inv_cdf(double u);

}  // namespace mevt
