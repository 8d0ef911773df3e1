#pragma once

// Bootstrap confidence intervals for the tail parameters (bias-corrected and
// accelerated) and their propagation to the selected rate.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mevt/bivariate.hpp"
#include "mevt/gpd.hpp"
#include "mevt/rate.hpp"

namespace mevt {

enum class IntervalMethod { Bca, Percentile, Wald };

const char* to_string(IntervalMethod m) noexcept;

struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  IntervalMethod method = IntervalMethod::Bca;
  bool point_outside = false;  // bias correction moved the interval off the point

  double width() const noexcept { return upper - lower; }
};

struct BcaFactors {
  double z0 = 0.0;
  double a = 0.0;
  std::size_t B = 0;
  double alpha = 0.05;
  double a1 = 0.025;
  double a2 = 0.975;
};

/// Orientation of the jackknife differences in the acceleration estimate.
/// Standard uses (mean - theta_j); Literal uses (theta_j - mean), which flips
/// the sign of a.
enum class AccelerationSign { Standard, Literal };

/// Which jackknife replicates to form.
enum class JackknifeMode {
  LeaveOneOut,     // n replicates, each dropping one exceedance
  LeaveFirstJ,     // replicate j drops the first j exceedances
};

inline constexpr std::size_t kMinBootstrapRounds = 200;
/// Above this many exceedances the leave-one-out refits use a one-step
/// Newton update from the full-sample optimum.
inline constexpr std::size_t kExactJackknifeLimit = 5000;

struct BootstrapOptions {
  std::size_t B = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct BootstrapResult {
  GpdParams point;
  std::vector<GpdParams> estimates;  // successful rounds, in round order
  std::size_t failed = 0;
};

/// Resample-with-replacement refits of the exceedance set. Round b draws from
/// Rng(derive_seed(seed, b)), so the output does not depend on threading.
/// Argument error for B < 200; Bootstrap error when more than 1% of rounds fail.
BootstrapResult bootstrap_gpd(std::span<const double> exceedances, GpdParams point,
                              const BootstrapOptions& opt);
BootstrapResult bootstrap_gpd(const IidSequence& seq, double u, const BootstrapOptions& opt);

struct JackknifeResult {
  std::vector<GpdParams> estimates;
  std::size_t failed = 0;
  bool one_step = false;
  JackknifeMode mode = JackknifeMode::LeaveOneOut;
};

JackknifeResult jackknife_gpd(std::span<const double> exceedances, GpdParams point,
                              JackknifeMode mode = JackknifeMode::LeaveOneOut,
                              unsigned threads = 1);
JackknifeResult jackknife_gpd(const IidSequence& seq, double u,
                              JackknifeMode mode = JackknifeMode::LeaveOneOut,
                              unsigned threads = 1);

double acceleration(std::span<const double> jack, AccelerationSign sign = AccelerationSign::Standard);

/// z0 from the share of bootstrap values below theta_hat, a from the jackknife
/// and the adjusted percentile levels a1, a2. Interval error when every or no
/// bootstrap value lies below theta_hat.
BcaFactors bca_factors(double theta_hat, std::span<const double> boot, std::span<const double> jack,
                       double alpha, AccelerationSign sign = AccelerationSign::Standard);

/// Factors with z0 = a = 0.
BcaFactors percentile_factors(std::size_t B, double alpha);

/// Rank round(level (B + 1)), half up, clamped to [1, B].
std::size_t bca_rank(double level, std::size_t B);

/// Order statistics at the ranks of a1 and a2.
IntervalEstimate bca_interval(std::span<const double> boot, const BcaFactors& f, double point);
IntervalEstimate percentile_interval(std::span<const double> boot, double alpha, double point);
IntervalEstimate wald_interval(double point, double se, double alpha);

struct GpdIntervals {
  IntervalEstimate sigma;
  IntervalEstimate xi;
  BcaFactors sigma_factors;
  BcaFactors xi_factors;
  std::size_t failed_bootstrap = 0;
  std::size_t failed_jackknife = 0;
  bool one_step_jackknife = false;
};

struct CiOptions {
  BootstrapOptions bootstrap;
  JackknifeMode jackknife = JackknifeMode::LeaveOneOut;
  AccelerationSign sign = AccelerationSign::Standard;
};

/// Resampling shared by several significance levels.
struct GpdResamples {
  GpdParams point;
  std::vector<double> boot_sigma, boot_xi;
  std::vector<double> jack_sigma, jack_xi;
  std::size_t failed_bootstrap = 0;
  std::size_t failed_jackknife = 0;
  bool one_step_jackknife = false;
};

GpdResamples resample_gpd(std::span<const double> exceedances, GpdParams point,
                          const CiOptions& opt);

GpdIntervals gpd_intervals(const GpdResamples& rs, double alpha,
                           AccelerationSign sign = AccelerationSign::Standard);

struct RateInterval {
  RateDecision decision;
  double rate_lower = 0.0;
  double rate_upper = 0.0;
  double alpha = 0.05;
  // keys: sigma_x, xi_x, sigma_y, xi_y
  std::map<std::string, IntervalEstimate> parameter_intervals;
  BetaParams corner_lower_beta;
  BetaParams corner_upper_beta;
  double corner_lower_rate = 0.0;
  double corner_upper_rate = 0.0;
  bool point_outside = false;
  std::vector<std::string> warnings;
};

/// Corner propagation: the angular model is refitted with the tails at
/// (sigma_x upper, xi_x lower, sigma_y lower, xi_y upper) and at the mirrored
/// corner; eps_n and max_r stay at their point values. Interval error naming
/// the corner when a corner tail does not cover the joint sample.
RateInterval propagate_rate_interval(const BgpdModel& model, const RateDecision& decision,
                                     const std::map<std::string, IntervalEstimate>& intervals,
                                     double alpha);

/// Cross-check: percentile interval of the rate over B resamples of the
/// training pairs, each rebuilt through the whole tail pipeline at the
/// training thresholds.
IntervalEstimate bootstrap_rate_interval(std::span<const double> x, std::span<const double> y,
                                         const BgpdModel& model, BetaParams test, double eps,
                                         double alpha, const BootstrapOptions& opt);

}  // namespace mevt
