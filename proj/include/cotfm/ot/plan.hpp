#pragma once

#include "cotfm/core.hpp"

#include <ostream>
#include <vector>

#include <json.hpp>

namespace cotfm::ot {

/// Transport matrix between two discrete measures plus solver diagnostics.
struct CouplingPlan {
  RowMatrix matrix;
  Vector row_marginal;
  Vector col_marginal;
  double cost_value = 0.0;
  // Solver diagnostics. Exact solvers always report converged.
  bool converged = true;
  int iterations = 0;
  double marginal_violation = 0.0;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }

  /// L1 distance between the plan's marginals and the prescribed ones.
  double marginal_error() const {
    return (matrix.rowwise().sum() - row_marginal).cwiseAbs().sum() +
           (matrix.colwise().sum().transpose() - col_marginal).cwiseAbs().sum();
  }

  double max_row_error() const { return (matrix.rowwise().sum() - row_marginal).cwiseAbs().maxCoeff(); }
  double max_col_error() const {
    return (matrix.colwise().sum().transpose() - col_marginal).cwiseAbs().maxCoeff();
  }

  bool is_feasible(double tol) const {
    return (matrix.array() >= 0.0).all() && max_row_error() <= tol && max_col_error() <= tol;
  }
};

/// <cost, plan> summed in row-major order.
inline double transport_cost(const RowMatrix& cost, const RowMatrix& plan) {
  double total = 0.0;
  for (Index i = 0; i < plan.rows(); ++i)
    for (Index j = 0; j < plan.cols(); ++j)
      if (plan(i, j) != 0.0) total += plan(i, j) * cost(i, j);
  return total;
}

struct PlanEntry {
  Index i;
  Index j;
  double mass;
};

/// Nonzero entries in row-major order.
inline std::vector<PlanEntry> support(const RowMatrix& plan, double threshold = 0.0) {
  std::vector<PlanEntry> out;
  for (Index i = 0; i < plan.rows(); ++i)
    for (Index j = 0; j < plan.cols(); ++j)
      if (plan(i, j) > threshold) out.push_back({i, j, plan(i, j)});
  return out;
}

// CSV export: header "i,j,mass", one line per nonzero entry.
inline void write_plan_csv(std::ostream& os, const CouplingPlan& plan) {
  os << "i,j,mass\n";
  os.precision(17);
  for (const auto& e : support(plan.matrix)) os << e.i << ',' << e.j << ',' << e.mass << '\n';
}

inline nlohmann::json plan_to_json(const CouplingPlan& plan) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < plan.rows(); ++i) {
    std::vector<double> r(plan.matrix.row(i).data(), plan.matrix.row(i).data() + plan.cols());
    rows.push_back(r);
  }
  return {{"rows", plan.rows()},
          {"cols", plan.cols()},
          {"matrix", rows},
          {"cost_value", plan.cost_value},
          {"converged", plan.converged},
          {"iterations", plan.iterations},
          {"marginal_violation", plan.marginal_violation}};
}

}  // namespace cotfm::ot
