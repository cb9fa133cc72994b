#pragma once

#include "cotfm/core.hpp"

#include <algorithm>
#include <vector>

#include <json.hpp>

namespace cotfm::metrics {

enum class MmdEstimator { biased, unbiased };

struct MmdConfig {
  // <= 0 selects the median heuristic on the pooled sample.
  double bandwidth = 0.0;
  MmdEstimator estimator = MmdEstimator::biased;
  // Pooled points used for the median heuristic (evenly strided, deterministic).
  Index median_points = 1000;

  void validate() const {
    require(std::isfinite(bandwidth), "MmdConfig: bandwidth must be finite");
    require(median_points >= 2, "MmdConfig: median_points must be >= 2");
  }
};

namespace detail {
inline double sq_dist(const RowMatrix& a, Index i, const RowMatrix& b, Index j) {
  double s = 0.0;
  for (Index k = 0; k < a.cols(); ++k) {
    const double d = a(i, k) - b(j, k);
    s += d * d;
  }
  return s;
}
}  // namespace detail

/// Median pairwise distance over (a strided subset of) the pooled sample.
inline double median_bandwidth(const RowMatrix& x, const RowMatrix& z, Index max_points = 1000) {
  const Index total = x.rows() + z.rows();
  const Index k = std::min(total, max_points);
  RowMatrix pooled(k, x.cols());
  for (Index s = 0; s < k; ++s) {
    const Index idx = static_cast<Index>((static_cast<double>(s) * static_cast<double>(total)) / static_cast<double>(k));
    pooled.row(s) = idx < x.rows() ? x.row(idx) : z.row(idx - x.rows());
  }
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(k * (k - 1) / 2));
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) d.push_back(std::sqrt(detail::sq_dist(pooled, i, pooled, j)));
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  const double h = *mid;
  return h > 0.0 ? h : 1.0;
}

/// Squared MMD with the Gaussian kernel k(x, z) = exp(-|x - z|^2 / (2 h^2)).
/// The biased (V-statistic) form keeps diagonal kernel terms; the unbiased
/// (U-statistic) form drops them.
inline double mmd_squared(const RowMatrix& x, const RowMatrix& z, const MmdConfig& cfg = {}) {
  cfg.validate();
  require(x.cols() == z.cols(), "mmd_squared: point sets differ in dimension");
  require(x.rows() >= 1 && z.rows() >= 1, "mmd_squared: empty point set");
  const bool unbiased = cfg.estimator == MmdEstimator::unbiased;
  if (unbiased) require(x.rows() >= 2 && z.rows() >= 2, "mmd_squared: unbiased estimator needs >= 2 points per set");
  const double h = cfg.bandwidth > 0.0 ? cfg.bandwidth : median_bandwidth(x, z, cfg.median_points);
  const double inv = 1.0 / (2.0 * h * h);

  auto self_term = [&](const RowMatrix& a) {
    const Index n = a.rows();
    double off = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) off += std::exp(-detail::sq_dist(a, i, a, j) * inv);
    const double nn = static_cast<double>(n);
    return unbiased ? 2.0 * off / (nn * (nn - 1.0)) : (2.0 * off + nn) / (nn * nn);
  };
  double cross = 0.0;
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < z.rows(); ++j) cross += std::exp(-detail::sq_dist(x, i, z, j) * inv);
  cross /= static_cast<double>(x.rows()) * static_cast<double>(z.rows());
  return self_term(x) + self_term(z) - 2.0 * cross;
}

/// Metric report in the {metric, value, n, seed, config} layout.
inline nlohmann::json metric_report(const std::string& metric, double value, Index n, std::uint64_t seed,
                                    nlohmann::json config = nlohmann::json::object()) {
  return {{"metric", metric}, {"value", value}, {"n", n}, {"seed", seed}, {"config", std::move(config)}};
}

}  // namespace cotfm::metrics
