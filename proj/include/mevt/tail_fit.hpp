#pragma once

// Lower-tail generalized Pareto modelling of one declustered channel.
// Exceedances are e = u - x for samples x < u.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mevt/gpd.hpp"
#include "mevt/trace.hpp"

namespace mevt {

inline constexpr std::size_t kMinExceedances = 30;

struct TailModel {
  double threshold_u = 0.0;
  double scale_sigma = 1.0;
  double shape_xi = 0.0;
  double zeta = 0.0;  // n_exceed / n_total
  std::size_t n_exceed = 0;
  std::size_t n_total = 0;
  double log_likelihood = 0.0;
  // Observed-information standard errors (NaN when unavailable).
  double se_sigma = 0.0;
  double se_xi = 0.0;
  double cov_sigma_xi = 0.0;
  std::vector<std::string> warnings;

  GpdParams params() const noexcept { return {scale_sigma, shape_xi}; }
  /// Largest admissible exceedance (infinite unless xi < 0).
  double support_limit() const noexcept;
};

/// Exceedances u - x of the samples strictly below u, in sample order.
std::vector<double> exceedances(std::span<const double> x, double u);

/// Maximum-likelihood lower-tail fit. Requires at least 30 exceedances.
TailModel fit_gpd(const IidSequence& seq, double u);
TailModel fit_gpd(std::span<const double> x, double u);

/// Same model with new (sigma, xi); zeta and threshold unchanged.
TailModel with_params(const TailModel& model, GpdParams params);

/// G = 1 - (1 + xi e / sigma)^(-1/xi) at e = u - x. Domain error for x > u
/// or beyond the support.
double gpd_cdf(const TailModel& model, double x);

/// Exact inverse of gpd_cdf: the x with gpd_cdf(x) = g.
double gpd_quantile(const TailModel& model, double g);

/// Survival factor (1 + xi e / sigma)^(-1/xi) of an exceedance e >= 0.
/// Returns 0 beyond the support.
double gpd_survival(GpdParams params, double e) noexcept;

/// Model probability P(X < x) = zeta * survival(u - x) for x <= u.
double tail_probability(const TailModel& model, double x);

struct ThresholdGrid {
  // Candidate thresholds at these empirical quantile levels (ascending).
  double level_min = 0.005;
  double level_max = 0.2;
  std::size_t count = 40;
  std::vector<double> explicit_thresholds;  // overrides the levels when set
};

struct MrlPoint {
  double threshold = 0.0;
  double mean_excess = 0.0;
  double ci_halfwidth = 0.0;
  std::size_t n_exceed = 0;
};

struct StabilityPoint {
  double threshold = 0.0;
  double xi = 0.0;
  double xi_halfwidth = 0.0;
  double modified_scale = 0.0;  // sigma + xi u (lower-tail orientation)
  double modified_scale_halfwidth = 0.0;
  std::size_t n_exceed = 0;
};

struct ThresholdDiagnostics {
  std::vector<double> candidate_thresholds;
  std::vector<MrlPoint> mrl_curve;
  std::vector<StabilityPoint> stability_curves;
  std::optional<double> mrl_suggested_u;
  std::optional<double> stability_suggested_u;
  std::optional<double> suggested_u;
  std::vector<std::string> warnings;
};

struct DiagnosticOptions {
  double alpha = 0.05;        // band level
  double r2_min = 0.99;       // linearity bound for the mean-excess curve
  std::size_t min_points = 3;  // candidates per linearity window
  unsigned threads = 1;
};

std::vector<double> candidate_thresholds(std::span<const double> x, const ThresholdGrid& grid);

ThresholdDiagnostics mrl_diagnostic(const IidSequence& seq, const ThresholdGrid& grid,
                                    const DiagnosticOptions& opt = {});
ThresholdDiagnostics stability_diagnostic(const IidSequence& seq, const ThresholdGrid& grid,
                                          const DiagnosticOptions& opt = {});
/// Both diagnostics on one grid; suggested_u is the lower of the two
/// suggestions (the deeper, more conservative threshold).
ThresholdDiagnostics threshold_diagnostics(const IidSequence& seq, const ThresholdGrid& grid,
                                           const DiagnosticOptions& opt = {});

void write_mrl_csv(const std::string& path, const ThresholdDiagnostics& diag);
void write_stability_csv(const std::string& path, const ThresholdDiagnostics& diag);

struct FitDiagnostics {
  std::vector<std::pair<double, double>> pp_points;  // (empirical CDF, model CDF)
  std::vector<std::pair<double, double>> qq_points;  // (empirical, model) exceedance quantiles
  double max_pp_deviation = 0.0;  // Kolmogorov distance
  double bound = 0.05;
  bool passed = true;
};

FitDiagnostics validate_fit(const TailModel& model, const IidSequence& seq, double bound = 0.05);
FitDiagnostics validate_fit(const TailModel& model, std::span<const double> x,
                            double bound = 0.05);

void write_fit_csv(const std::string& path, const FitDiagnostics& diag);

}  // namespace mevt
