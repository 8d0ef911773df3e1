#pragma once

// Data-parallel inner loops shared by the estimators.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is picked once at startup from the CPU
// feature bits and can be pinned with the MEVT_SIMD environment variable
// ("scalar" or "avx2") or set_isa(). Both variants are deterministic for a
// given input; they are not bit-identical to each other because the vector
// reductions accumulate in a different order (see tests/test_simd.cpp for
// the equivalence tolerances).

#include <cstddef>
#include <span>
#include <string_view>

namespace mevt::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

/// Best ISA supported by both this build and the running CPU.
Isa best_available() noexcept;

/// ISA used by the dispatching entry points below.
Isa active_isa() noexcept;

/// Pins the dispatch ISA. Requests for an unavailable ISA fall back to
/// Scalar; the ISA actually selected is returned.
Isa set_isa(Isa isa) noexcept;

/// Parses "auto", "scalar" or "avx2". Returns false on anything else.
bool parse_isa(std::string_view text, Isa& out) noexcept;

/// Sums needed by the generalized Pareto log-likelihood and its first two
/// derivatives, evaluated at y_i = e_i * inv_scale, z_i = 1 + shape * y_i.
struct GpdTerms {
  double log_sum = 0.0;     // sum ln z_i
  double ratio_sum = 0.0;   // sum y_i / z_i
  double ratio2_sum = 0.0;  // sum y_i^2 / z_i^2
  double cross_sum = 0.0;   // sum y_i / z_i^2
  double min_z = 0.0;       // min z_i (support check: must be > 0)
};

struct LogTerms {
  double log_sum = 0.0;  // sum ln(1 + c * e_i)
  double min_z = 0.0;    // min (1 + c * e_i)
};

struct Moments2 {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sxx = 0.0;  // centred sums of squares / cross products
  double syy = 0.0;
  double sxy = 0.0;
};

// Dispatching entry points. All spans may be empty.

/// out[i] = min(in[i*cluster .. (i+1)*cluster)); out.size() blocks are read.
void block_minima(std::span<const double> in, std::size_t cluster,
                  std::span<double> out);

/// Number of elements strictly below the threshold.
std::size_t count_less(std::span<const double> v, double threshold);

double sum(std::span<const double> v);

/// Two-pass centred moments of a paired sample (x.size() == y.size()).
Moments2 moments2(std::span<const double> x, std::span<const double> y);

/// sum_i e_i^m for m = 1..out.size().
void power_sums(std::span<const double> e, std::span<double> out);

LogTerms gpd_log_terms(std::span<const double> e, double c);

GpdTerms gpd_terms(std::span<const double> e, double inv_scale, double shape);

/// r[i] = -(xt[i] + yt[i]) / n, omega[i] = (-xt[i] / n) / r[i].
void pickands(std::span<const double> xt, std::span<const double> yt, double n,
              std::span<double> r, std::span<double> omega);

// Direct access to each variant, used by the equivalence tests.
namespace scalar {
void block_minima(std::span<const double> in, std::size_t cluster,
                  std::span<double> out);
std::size_t count_less(std::span<const double> v, double threshold);
double sum(std::span<const double> v);
Moments2 moments2(std::span<const double> x, std::span<const double> y);
void power_sums(std::span<const double> e, std::span<double> out);
LogTerms gpd_log_terms(std::span<const double> e, double c);
GpdTerms gpd_terms(std::span<const double> e, double inv_scale, double shape);
void pickands(std::span<const double> xt, std::span<const double> yt, double n,
              std::span<double> r, std::span<double> omega);
}  // namespace scalar

#if defined(MEVT_HAVE_AVX2)
namespace avx2 {
void block_minima(std::span<const double> in, std::size_t cluster,
                  std::span<double> out);
std::size_t count_less(std::span<const double> v, double threshold);
double sum(std::span<const double> v);
Moments2 moments2(std::span<const double> x, std::span<const double> y);
void power_sums(std::span<const double> e, std::span<double> out);
LogTerms gpd_log_terms(std::span<const double> e, double c);
GpdTerms gpd_terms(std::span<const double> e, double inv_scale, double shape);
void pickands(std::span<const double> xt, std::span<const double> yt, double n,
              std::span<double> r, std::span<double> omega);
}  // namespace avx2
#endif

}  // namespace mevt::simd
