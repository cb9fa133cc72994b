#pragma once

#include "cotfm/core.hpp"
#include "cotfm/ot/cost.hpp"
#include "cotfm/ot/exact.hpp"
#include "cotfm/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace cotfm::metrics {

/// Exact p-Wasserstein distance between two weighted point sets.
inline double wasserstein(const RowMatrix& x, const Vector& a, const RowMatrix& z, const Vector& b, int p = 2) {
  require(x.cols() == z.cols(), "wasserstein: point sets differ in dimension");
  const RowMatrix cost = ot::distance_matrix(x, z, p);
  const double c = std::max(0.0, ot::solve_exact(cost, a, b).cost_value);
  return p == 2 ? std::sqrt(c) : c;
}

/// `k` distinct rows of `x` chosen uniformly (partial Fisher-Yates), in draw order.
inline RowMatrix subsample_rows(const RowMatrix& x, Index k, std::uint64_t seed) {
  require(k >= 1 && k <= x.rows(), "subsample_rows: invalid sample size");
  if (k == x.rows()) return x;
  std::vector<Index> idx(x.rows());
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng = make_rng(seed, 0x5b5eULL);
  for (Index s = 0; s < k; ++s) std::swap(idx[s], idx[s + uniform_index(rng, x.rows() - s)]);
  RowMatrix out(k, x.cols());
  for (Index s = 0; s < k; ++s) out.row(s) = x.row(idx[s]);
  return out;
}

inline constexpr Index kMaxMetricPoints = 5000;

/// sqrt of the optimal mean squared-distance matching cost between two equal
/// size uniform samples. The larger set (and anything above `max_points`) is
/// subsampled deterministically from `seed`.
inline double w2_empirical(const RowMatrix& x, const RowMatrix& z, std::uint64_t seed = 0,
                           Index max_points = kMaxMetricPoints) {
  require(x.rows() > 0 && z.rows() > 0, "w2_empirical: empty point set");
  require(x.cols() == z.cols(), "w2_empirical: point sets differ in dimension");
  const Index n = std::min({x.rows(), z.rows(), max_points});
  const RowMatrix xs = x.rows() == n ? x : subsample_rows(x, n, seed);
  const RowMatrix zs = z.rows() == n ? z : subsample_rows(z, n, seed + 1);
  const RowMatrix cost = ot::distance_matrix(xs, zs, 2);
  const auto perm = ot::solve_assignment(cost);
  // Summing the matched costs in sorted order makes the value independent of
  // argument order.
  std::vector<double> matched(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) matched[static_cast<std::size_t>(i)] = cost(i, perm[i]);
  std::sort(matched.begin(), matched.end());
  double total = 0.0;
  for (double c : matched) total += c;
  return std::sqrt(std::max(0.0, total / static_cast<double>(n)));
}

}  // namespace cotfm::metrics
