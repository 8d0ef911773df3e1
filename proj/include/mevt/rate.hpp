#pragma once

// Rate selection from the bivariate tail model and outage assessment on
// held-out data.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mevt/bivariate.hpp"
#include "mevt/specfun.hpp"

namespace mevt {

struct RateDecision {
  double target_eps = 0.0;
  double eps_n = 0.0;
  double angular_arg = 0.0;       // a = max_r ln(eps_n) / 2
  double angular_quantile = 0.0;  // H^-1(a)
  double rate_bits = 0.0;         // log2(1 + quantile)
  double max_r = 0.0;
  BetaParams train_beta;
  BetaParams test_beta;
  std::string model_ref;
  bool eps_n_exceeds_target = false;
  bool eps_n_underflow = false;  // eps_n below the smallest normal double; rate reported as 0
  std::vector<std::string> warnings;
};

/// eps_n = exp{(2 / max_r) H_train(H_test^-1(eps))}.
double compute_eps_n(BetaParams train, double max_r, BetaParams test, double eps);
double compute_eps_n(const BgpdModel& model, BetaParams test, double eps);

/// H^-1(max_r ln(eps_n) / 2). Domain error (quoting max_r and eps_n) when the
/// argument leaves [0, 1].
double invert_bgpd(BetaParams train, double max_r, double eps_n);
double invert_bgpd(const BgpdModel& model, double eps_n);

/// Full quantile chain shared by the tail model and the extrapolation baseline.
RateDecision rate_chain(BetaParams train, double max_r, BetaParams test, double eps,
                        std::string model_ref = {});

RateDecision select_rate(const BgpdModel& model, double eps, BetaParams test,
                         std::string model_ref = "bgpd");

/// Rate from an angular quantile: log2(1 + w).
double rate_from_quantile(double w);

/// Angular component over the full (training + test) data: the tails are
/// refitted at the training thresholds and the Beta is fitted to omega.
BgpdModel fit_z_model(std::span<const double> x_full, std::span<const double> y_full,
                      const BgpdModel& train, bool symmetric = false);

struct OutageReport {
  double target_eps = 0.0;
  double rate_bits = 0.0;
  double empirical_outage = 0.0;    // violations / n_test
  double conditional_outage = 0.0;  // violations / joint tail count
  double model_outage = 0.0;        // H_Z(quantile)
  std::size_t n_test = 0;
  std::size_t joint_count = 0;
  std::size_t violations = 0;
  bool satisfied = false;  // empirical_outage <= target_eps
  // Diagnostic for the literal radial reading of Z: share of radial values
  // that fall outside the [0, 1] domain of the Beta CDF.
  bool radial_diagnostic = false;
  double radial_out_of_domain = 0.0;
  std::vector<std::string> warnings;
};

/// Empirical outage on test data. A test instant is an outage when both
/// channels lie in their tails (Z model thresholds) and log2(1 + omega) is
/// below the selected rate, omega being its angular coordinate under the Z
/// model's Frechet margins.
OutageReport assess_outage(const RateDecision& decision, std::span<const double> test_x,
                           std::span<const double> test_y, const BgpdModel& z_model,
                           bool radial_diagnostic = false);

/// Same assessment with arbitrary margin probabilities P(X < x), P(Y < y)
/// below the thresholds and the Z angular law `z_beta`.
OutageReport assess_outage(const RateDecision& decision, std::span<const double> test_x,
                           std::span<const double> test_y, double ux, double uy,
                           const std::function<double(double)>& prob_x,
                           const std::function<double(double)>& prob_y, BetaParams z_beta,
                           bool radial_diagnostic = false);

/// CSV sweep row writer; header is written when the file is new or empty.
void append_rate_csv(const std::string& path, const RateDecision& d, std::size_t n_train);
void append_outage_csv(const std::string& path, const OutageReport& r);

}  // namespace mevt
