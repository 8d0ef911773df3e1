#pragma once

// Synthetic two-receiver power traces with known margins and dependence.

#include <cstdint>
#include <string>
#include <utility>

#include "mevt/trace.hpp"

namespace mevt {

enum class SynthMarginFamily { GpdGaussian, Gaussian, Lognormal };
enum class DependenceFamily { Independent, GaussianCopula, Logistic };

const char* to_string(SynthMarginFamily f) noexcept;
const char* to_string(DependenceFamily f) noexcept;

/// One channel's marginal law (linear mW).
///   GpdGaussian: P(X < x) = zeta * S(u - x) below u, with S the GPD(sigma, xi)
///     survival; above u a Gaussian(mu, s) bulk conditioned on x >= u. The CDF
///     is continuous at u.
///   Gaussian: N(mu, s).
///   Lognormal: ln X ~ N(mu, s).
struct SynthMargin {
  SynthMarginFamily family = SynthMarginFamily::GpdGaussian;
  double mu = 2.0;
  double s = 0.3;
  double u = 1.6;
  double zeta = 0.05;
  double sigma = 0.35;
  double xi = -0.25;

  double cdf(double x) const;
  /// Inverse CDF at a uniform value in (0, 1).
  double quantile(double v) const;
};

struct SynthSpec {
  SynthMargin margin_x;
  SynthMargin margin_y;
  DependenceFamily dependence = DependenceFamily::Logistic;
  double rho = 0.3;    // Gaussian copula correlation
  double theta = 0.5;  // logistic dependence, (0, 1]; 1 is independence
  std::size_t n_total = 100000;
  std::uint64_t seed = 1;
};

/// Argument error when a parameter leaves its family's domain or a margin can
/// produce non-positive powers.
void validate(const SynthSpec& spec);

inline constexpr std::size_t kSynthBlock = 1 << 16;

/// Deterministic in (spec, seed); block k of 65536 pairs draws from
/// Rng(derive_seed(seed, k)), so the output does not depend on `threads`.
std::pair<PowerTrace, PowerTrace> generate(const SynthSpec& spec, unsigned threads = 1);

/// Copula C(a, b) = P(U < a, V < b) of the lower-tail-oriented dependence.
double copula_cdf(const SynthSpec& spec, double a, double b);

/// P(X < x, Y < y).
double true_joint_tail_prob(const SynthSpec& spec, double x, double y);

}  // namespace mevt
