#pragma once

#include "cotfm/core.hpp"
#include "cotfm/ot/coupling.hpp"
#include "cotfm/ot/measure.hpp"

#include <vector>

namespace cotfm::cw {

using ot::DiscreteMeasure;

/// Result of the empirical conditional Wasserstein estimator.
struct CwEstimate {
  double distance = 0.0;     // u_cost^(1/p): the W_p^mu estimate
  double u_cost = 0.0;       // sum_ij plan_ij |u_j - u_i|^p
  double eps_cost = 0.0;     // optimum of the eps-relaxed triangular cost
  double max_y_slack = 0.0;  // max |y_j - y_i| over supported pairs
  ot::CouplingPlan plan;
};

namespace detail {
inline double norm_pow(double squared_norm, int p) { return p == 2 ? squared_norm : std::sqrt(squared_norm); }
}  // namespace detail

/// Conditional p-Wasserstein estimate between two discrete measures with a
/// common Y-marginal.
///
/// Solves the coupling problem for |dy|^p + eps |du|^p and reports the
/// U-only displacement cost of that plan. When both measures put their atoms
/// on a shared set of y values and eps is small enough to forbid cross-y
/// transport, the plan is block diagonal and the estimate is exact.
inline CwEstimate empirical_cw(const DiscreteMeasure& src, const DiscreteMeasure& tgt, int p, double epsilon,
                               const ot::SolverMethod& method = {}) {
  src.validate();
  tgt.validate();
  require(p == 1 || p == 2, "empirical_cw: p must be 1 or 2");
  require(epsilon > 0.0, "empirical_cw: epsilon must be positive");
  CwEstimate est;
  est.plan = ot::cot_coupling(src, tgt, epsilon, method, p);
  est.eps_cost = est.plan.cost_value;
  for (Index i = 0; i < src.size(); ++i) {
    for (Index j = 0; j < tgt.size(); ++j) {
      const double mass = est.plan.matrix(i, j);
      if (mass <= 0.0) continue;
      est.u_cost += mass * detail::norm_pow((tgt.u(j) - src.u(i)).squaredNorm(), p);
      // Slack only counts pairs carrying a non-negligible share of mass.
      if (mass > 1e-12) est.max_y_slack = std::max(est.max_y_slack, (tgt.y(j) - src.y(i)).norm());
    }
  }
  est.distance = p == 2 ? std::sqrt(est.u_cost) : est.u_cost;
  return est;
}

/// Coupling of two measures together with the times at which to evaluate
/// the displacement interpolation.
struct InterpolantPath {
  DiscreteMeasure src;
  DiscreteMeasure tgt;
  ot::CouplingPlan coupling;
  std::vector<double> t_grid;
  double max_y_slack = 0.0;
};

inline InterpolantPath make_interpolant_path(const DiscreteMeasure& src, const DiscreteMeasure& tgt, double epsilon,
                                             const ot::SolverMethod& method = {},
                                             std::vector<double> t_grid = {0.0, 0.25, 0.5, 0.75, 1.0}) {
  const CwEstimate est = empirical_cw(src, tgt, 2, epsilon, method);
  for (double t : t_grid) require(t >= 0.0 && t <= 1.0, "make_interpolant_path: t_grid outside [0,1]");
  return {src, tgt, est.plan, std::move(t_grid), est.max_y_slack};
}

/// Pushes each supported pair (z0, z1) of the coupling to (1 - t) z0 + t z1,
/// carrying the pair's mass. Endpoints reproduce the source (t = 0) and target
/// (t = 1) atoms exactly.
inline DiscreteMeasure mccann_interpolate(const InterpolantPath& path, double t) {
  require(t >= 0.0 && t <= 1.0, "mccann_interpolate: t must lie in [0,1]");
  const auto cells = ot::support(path.coupling.matrix);
  require(!cells.empty(), "mccann_interpolate: empty coupling");
  RowMatrix pts(static_cast<Index>(cells.size()), path.src.dim());
  Vector w(static_cast<Index>(cells.size()));
  double total = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    const Index r = static_cast<Index>(k);
    pts.row(r) = (1.0 - t) * path.src.points.row(c.i) + t * path.tgt.points.row(c.j);
    w(r) = c.mass;
    total += c.mass;
  }
  w /= total;
  return DiscreteMeasure(std::move(pts), std::move(w), path.src.d_y);
}

/// Velocity carried by each interpolated atom: (0, u1 - u0), constant in t.
/// Rows follow the atom order of `mccann_interpolate`.
inline RowMatrix interpolant_velocity(const InterpolantPath& path, double t) {
  require(t >= 0.0 && t <= 1.0, "interpolant_velocity: t must lie in [0,1]");
  const auto cells = ot::support(path.coupling.matrix);
  RowMatrix vel = RowMatrix::Zero(static_cast<Index>(cells.size()), path.src.dim());
  for (std::size_t k = 0; k < cells.size(); ++k)
    vel.row(static_cast<Index>(k)).tail(path.src.d_u) = path.tgt.u(cells[k].j) - path.src.u(cells[k].i);
  return vel;
}

}  // namespace cotfm::cw
