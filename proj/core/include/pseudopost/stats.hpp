#pragma once

#include <algorithm>
#include <vector>

namespace pseudopost {

// Linear-interpolation quantile (the common "type 7" rule) on an ascending
// vector; p in [0, 1].
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

}  // namespace pseudopost
