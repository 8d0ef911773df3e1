#include "mevt/stats.hpp"

#include <algorithm>
#include <cmath>

#include "mevt/error.hpp"
#include "mevt/simd.hpp"

namespace mevt {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::Argument, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorKind::Argument, "quantile level outside [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double empirical_quantile(std::span<const double> data, double q) {
  if (data.empty()) fail(ErrorKind::Argument, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorKind::Argument, "quantile level outside [0, 1]");
  std::vector<double> v(data.begin(), data.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

double mean(std::span<const double> v) {
  if (v.empty()) fail(ErrorKind::Argument, "mean of an empty sample");
  return simd::sum(v) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.empty()) fail(ErrorKind::Argument, "variance of an empty sample");
  const auto m = simd::moments2(v, v);
  return m.sxx / static_cast<double>(v.size());
}

}  // namespace mevt
