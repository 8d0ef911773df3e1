#pragma once

// Generalized Pareto likelihood machinery for positive exceedances e:
// density (1/sigma) (1 + xi e / sigma)^(-1/xi - 1).

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace mevt {

struct GpdParams {
  double sigma = 1.0;
  double xi = 0.0;
};

/// Exceedance sample with the power sums the small-shape series needs.
class GpdData {
 public:
  static constexpr std::size_t kPowers = 12;

  explicit GpdData(std::vector<double> exceedances);

  std::span<const double> values() const noexcept { return e_; }
  std::size_t size() const noexcept { return e_.size(); }
  double max() const noexcept { return max_; }
  /// powers()[m-1] = sum e_i^m
  const std::array<double, kPowers>& powers() const noexcept { return powers_; }

 private:
  std::vector<double> e_;
  double max_ = 0.0;
  std::array<double, kPowers> powers_{};
};

/// Log-likelihood and its derivatives in (sigma, xi).
struct GpdDerivatives {
  double loglik = 0.0;
  double d_sigma = 0.0;
  double d_xi = 0.0;
  double d_sigma_sigma = 0.0;
  double d_sigma_xi = 0.0;
  double d_xi_xi = 0.0;
  bool feasible = false;
};

/// Log-likelihood; -infinity outside the support or parameter domain.
double gpd_loglik(const GpdData& data, GpdParams params);

GpdDerivatives gpd_derivatives(const GpdData& data, GpdParams params);

/// Contribution of a single exceedance to the log-likelihood derivatives.
GpdDerivatives gpd_point_derivatives(double e, GpdParams params);

/// Probability-weighted-moment estimate (Hosking and Wallis).
GpdParams gpd_pwm(std::span<const double> exceedances);

struct GpdFit {
  GpdParams params;
  double loglik = 0.0;
  double start_loglik = 0.0;  // at the PWM initializer (or warm start)
  int iterations = 0;
  bool converged = false;
};

/// Full maximum-likelihood fit: Nelder-Mead on (log sigma, xi) from the PWM
/// start, restricted to xi in (-1, 1], then a guarded Newton polish.
/// Throws Fit errors on degenerate data or non-convergence.
GpdFit gpd_mle(const GpdData& data);

/// Warm-started refit used by the resampling loops: Newton from `start`,
/// falling back to the full fit. Returns nullopt when both fail.
std::optional<GpdFit> gpd_refit(const GpdData& data, GpdParams start);

/// Inverse of the observed information at params: {var sigma, var xi, cov}.
/// Returns nullopt if the Hessian is not negative definite.
std::optional<std::array<double, 3>> gpd_covariance(const GpdData& data, GpdParams params);

}  // namespace mevt
