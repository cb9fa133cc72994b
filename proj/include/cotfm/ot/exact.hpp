#pragma once

#include "cotfm/core.hpp"
#include "cotfm/ot/assignment.hpp"
#include "cotfm/ot/measure.hpp"
#include "cotfm/ot/network_simplex.hpp"
#include "cotfm/ot/plan.hpp"

namespace cotfm::ot {

// Dense problems above this size are refused by the general solver.
inline constexpr Index kMaxExactEntries = Index{1} << 22;
// Square uniform problems go through the assignment solver, which only needs
// the cost matrix itself; this caps its memory at ~512 MiB.
inline constexpr Index kMaxAssignmentSize = 8192;

namespace detail {
inline void check_exact_inputs(const RowMatrix& cost, const Vector& a, const Vector& b) {
  require(cost.rows() == a.size() && cost.cols() == b.size(), "solve_exact: cost shape does not match marginals");
  require(cost.allFinite(), "solve_exact: non-finite cost entry");
  require(a.allFinite() && b.allFinite() && (a.array() >= 0).all() && (b.array() >= 0).all(),
          "solve_exact: weights must be finite and nonnegative");
  require(std::abs(a.sum() - b.sum()) <= 1e-9, "solve_exact: infeasible marginals (total masses differ)");
  require(std::abs(a.sum() - 1.0) <= 1e-9, "solve_exact: weights must sum to 1");
}
}  // namespace detail

/// Exact minimizer of <cost, plan> over the transportation polytope of (a, b).
///
/// Equal-size uniform problems are solved as an assignment problem, which
/// yields a permutation plan with entries 1/n. Anything else goes through the
/// network simplex and is limited to n*m <= 2^22 entries.
inline CouplingPlan solve_exact(const RowMatrix& cost, const Vector& a, const Vector& b) {
  detail::check_exact_inputs(cost, a, b);
  const Index n = cost.rows(), m = cost.cols();
  CouplingPlan plan;
  plan.row_marginal = a;
  plan.col_marginal = b;
  if (n == m && is_uniform(a) && is_uniform(b)) {
    require(n <= kMaxAssignmentSize, "solve_exact: assignment problem too large");
    const auto perm = solve_assignment(cost);
    plan.matrix = RowMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) plan.matrix(i, perm[i]) = a(i);
  } else {
    require(n * m <= kMaxExactEntries, "solve_exact: problem exceeds n*m <= 2^22");
    NetworkSimplex simplex(cost, a, b);
    plan.matrix = simplex.solve();
    plan.iterations = static_cast<int>(simplex.pivots());
  }
  plan.cost_value = transport_cost(cost, plan.matrix);
  plan.marginal_violation = plan.marginal_error();
  return plan;
}

/// Always uses the network simplex, even for uniform square inputs.
inline CouplingPlan solve_network_simplex(const RowMatrix& cost, const Vector& a, const Vector& b) {
  detail::check_exact_inputs(cost, a, b);
  require(cost.rows() * cost.cols() <= kMaxExactEntries, "solve_network_simplex: problem exceeds n*m <= 2^22");
  CouplingPlan plan;
  plan.row_marginal = a;
  plan.col_marginal = b;
  NetworkSimplex simplex(cost, a, b);
  plan.matrix = simplex.solve();
  plan.iterations = static_cast<int>(simplex.pivots());
  plan.cost_value = transport_cost(cost, plan.matrix);
  plan.marginal_violation = plan.marginal_error();
  return plan;
}

}  // namespace cotfm::ot
