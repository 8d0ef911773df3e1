#pragma once

#include <span>
#include <vector>

namespace mevt {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

/// Same, on unsorted data (copies and partially sorts).
double empirical_quantile(std::span<const double> data, double q);

double mean(std::span<const double> v);

/// Maximum-likelihood (divide by n) variance.
double variance(std::span<const double> v);

}  // namespace mevt
