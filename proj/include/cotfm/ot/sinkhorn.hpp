#pragma once

#include "cotfm/core.hpp"
#include "cotfm/ot/plan.hpp"

#include <algorithm>
#include <vector>

namespace cotfm::ot {

/// Entropic OT in the log domain with an epsilon-scaling warm start.
///
/// Dual potentials (f, g) are updated by alternating soft-min steps
///   f_i = r log a_i - r LSE_j((g_j - C_ij) / r)
///   g_j = r log b_j - r LSE_i((f_i - C_ij) / r)
/// while the regularization r decreases geometrically from max(C) to `reg`.
/// After each g update the column marginals hold exactly; convergence is
/// measured as the L1 violation of both marginals. Hitting `max_iter` is
/// reported through `converged = false`, not an exception.
inline CouplingPlan solve_sinkhorn(const RowMatrix& cost, const Vector& a, const Vector& b, double reg,
                                   int max_iter = 10000, double tol = 1e-9) {
  const Index n = cost.rows(), m = cost.cols();
  require(reg > 0.0 && std::isfinite(reg), "solve_sinkhorn: reg must be positive");
  require(tol > 0.0, "solve_sinkhorn: tol must be positive");
  require(max_iter >= 1, "solve_sinkhorn: max_iter must be >= 1");
  require(a.size() == n && b.size() == m, "solve_sinkhorn: cost shape does not match marginals");
  require(cost.allFinite(), "solve_sinkhorn: non-finite cost entry");
  require((a.array() >= 0).all() && (b.array() >= 0).all(), "solve_sinkhorn: negative weight");

  const Vector log_a = a.array().log();
  const Vector log_b = b.array().log();
  Vector f = Vector::Zero(n), g = Vector::Zero(m);
  std::vector<double> col_max(m), col_sum(m);

  auto update_f = [&](double r) {
    for (Index i = 0; i < n; ++i) {
      if (!std::isfinite(log_a(i))) {
        f(i) = -kInf;
        continue;
      }
      double mx = -kInf;
      for (Index j = 0; j < m; ++j) mx = std::max(mx, (g(j) - cost(i, j)) / r);
      double s = 0.0;
      for (Index j = 0; j < m; ++j) s += std::exp((g(j) - cost(i, j)) / r - mx);
      f(i) = r * log_a(i) - r * (mx + std::log(s));
    }
  };
  auto update_g = [&](double r) {
    std::fill(col_max.begin(), col_max.end(), -kInf);
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    for (Index i = 0; i < n; ++i) {
      if (f(i) == -kInf) continue;
      for (Index j = 0; j < m; ++j) col_max[j] = std::max(col_max[j], (f(i) - cost(i, j)) / r);
    }
    for (Index i = 0; i < n; ++i) {
      if (f(i) == -kInf) continue;
      for (Index j = 0; j < m; ++j) col_sum[j] += std::exp((f(i) - cost(i, j)) / r - col_max[j]);
    }
    for (Index j = 0; j < m; ++j)
      g(j) = std::isfinite(log_b(j)) ? r * log_b(j) - r * (col_max[j] + std::log(col_sum[j])) : -kInf;
  };
  auto row_violation = [&](double r) {
    double err = 0.0;
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      if (f(i) != -kInf)
        for (Index j = 0; j < m; ++j)
          if (g(j) != -kInf) s += std::exp((f(i) + g(j) - cost(i, j)) / r);
      err += std::abs(s - a(i));
    }
    return err;
  };

  const double cmax = cost.size() ? cost.cwiseAbs().maxCoeff() : 0.0;
  double r = std::max(reg, cmax);
  // Warm-start stages at coarser regularization.
  while (r > reg) {
    for (int it = 0; it < 50; ++it) {
      update_f(r);
      update_g(r);
    }
    r = std::max(reg, r * 0.25);
  }

  CouplingPlan plan;
  plan.row_marginal = a;
  plan.col_marginal = b;
  plan.converged = false;
  double violation = kInf;
  int it = 0;
  while (it < max_iter) {
    update_f(reg);
    update_g(reg);
    ++it;
    if (it % 10 == 0 || it == max_iter) {
      violation = row_violation(reg);
      if (!std::isfinite(violation)) throw NumericError("solve_sinkhorn: non-finite potentials");
      if (violation <= tol) {
        plan.converged = true;
        break;
      }
    }
  }
  plan.iterations = it;
  plan.matrix.resize(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      plan.matrix(i, j) = (f(i) == -kInf || g(j) == -kInf) ? 0.0 : std::exp((f(i) + g(j) - cost(i, j)) / reg);
  plan.marginal_violation = plan.marginal_error();
  plan.cost_value = transport_cost(cost, plan.matrix);
  return plan;
}

}  // namespace cotfm::ot
