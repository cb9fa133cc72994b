#pragma once

#include "cotfm/core.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

namespace cotfm::bench {

inline double mean_of(const std::vector<double>& v) {
  require(!v.empty(), "mean_of: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// "m ± s" with both values divided by `unit` and printed to 2 decimals,
/// e.g. unit 1e-2 turns 0.065, 0.0141 into "6.50 ± 1.41".
inline std::string mean_pm_sd(const std::vector<double>& v, double unit) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean_of(v) / unit, sd_of(v) / unit);
  return buf;
}

inline double median_of(std::vector<double> v) {
  require(!v.empty(), "median_of: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace cotfm::bench
