#pragma once

#include "cotfm/core.hpp"
#include "cotfm/ot/cost.hpp"
#include "cotfm/ot/exact.hpp"
#include "cotfm/ot/measure.hpp"
#include "cotfm/ot/plan.hpp"
#include "cotfm/ot/sinkhorn.hpp"
#include "cotfm/rng.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace cotfm::ot {

struct SolverMethod {
  enum class Kind { exact, sinkhorn };
  Kind kind = Kind::exact;
  double reg = 1e-2;
  int max_iter = 10000;
  double tol = 1e-9;

  static SolverMethod exact() { return {}; }
  static SolverMethod sinkhorn(double reg, int max_iter = 10000, double tol = 1e-9) {
    return {Kind::sinkhorn, reg, max_iter, tol};
  }
};

inline CouplingPlan solve(const RowMatrix& cost, const Vector& a, const Vector& b, const SolverMethod& method) {
  if (method.kind == SolverMethod::Kind::exact) return solve_exact(cost, a, b);
  return solve_sinkhorn(cost, a, b, method.reg, method.max_iter, method.tol);
}

/// Coupling under the triangular cost |dy|^p + eps |du|^p. As eps -> 0 the
/// plan concentrates on pairs with (nearly) equal y.
inline CouplingPlan cot_coupling(const DiscreteMeasure& src, const DiscreteMeasure& tgt, double epsilon,
                                 const SolverMethod& method = {}, int power = 2) {
  const RowMatrix cost = cost_matrix(src, tgt, CostSpec::cot(epsilon, power));
  return solve(cost, src.weights, tgt.weights, method);
}

using IndexPair = std::pair<Index, Index>;

/// Draws k i.i.d. (row, col) pairs with probability proportional to the plan
/// entries.
inline std::vector<IndexPair> sample_pairs(const RowMatrix& plan, Index k, Rng& rng) {
  require(k >= 1, "sample_pairs: k must be >= 1");
  require(plan.allFinite() && (plan.array() >= 0.0).all(), "sample_pairs: plan entries must be finite and >= 0");
  std::vector<double> cumulative;
  std::vector<IndexPair> cells;
  double total = 0.0;
  for (Index i = 0; i < plan.rows(); ++i)
    for (Index j = 0; j < plan.cols(); ++j)
      if (plan(i, j) > 0.0) {
        total += plan(i, j);
        cumulative.push_back(total);
        cells.emplace_back(i, j);
      }
  require(total > 0.0, "sample_pairs: degenerate plan (all entries zero)");
  std::vector<IndexPair> out;
  out.reserve(k);
  for (Index s = 0; s < k; ++s) {
    const double x = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    if (it == cumulative.end()) --it;
    out.push_back(cells[static_cast<std::size_t>(it - cumulative.begin())]);
  }
  return out;
}

inline std::vector<IndexPair> sample_pairs(const CouplingPlan& plan, Index k, Rng& rng) {
  return sample_pairs(plan.matrix, k, rng);
}

}  // namespace cotfm::ot
