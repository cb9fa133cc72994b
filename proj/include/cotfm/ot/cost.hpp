#pragma once

#include "cotfm/core.hpp"
#include "cotfm/ot/measure.hpp"

namespace cotfm::ot {

enum class CostKind { squared_euclidean, cot_epsilon };

/// Ground cost between atoms. With power p = 2 the squared-euclidean kind is
/// |z1 - z0|^2 and the cot-epsilon kind is |y1 - y0|^2 + eps |u1 - u0|^2; with
/// p = 1 the norms enter unsquared.
struct CostSpec {
  CostKind kind = CostKind::cot_epsilon;
  double epsilon = 1e-2;
  int power = 2;

  static CostSpec euclidean(int p = 2) { return {CostKind::squared_euclidean, 0.0, p}; }
  static CostSpec cot(double eps, int p = 2) { return {CostKind::cot_epsilon, eps, p}; }

  void validate() const {
    require(power == 1 || power == 2, "CostSpec: power must be 1 or 2");
    if (kind == CostKind::cot_epsilon)
      require(epsilon > 0.0 && std::isfinite(epsilon), "CostSpec: epsilon must be positive");
  }
};

namespace detail {
inline double lift(double squared_norm, int p) { return p == 2 ? squared_norm : std::sqrt(squared_norm); }
}  // namespace detail

/// Cost between two raw point sets sharing a (d_y, d_u) split. Each entry is
/// evaluated independently with a fixed summation order over coordinates.
inline RowMatrix cost_matrix(const RowMatrix& src, const RowMatrix& tgt, Index d_y, const CostSpec& spec) {
  spec.validate();
  require(src.cols() == tgt.cols(), "cost_matrix: dimension mismatch between source and target");
  require(d_y >= 0 && d_y <= src.cols(), "cost_matrix: invalid d_y");
  const Index n = src.rows(), m = tgt.rows(), d = src.cols();
  RowMatrix c(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      double sy = 0.0, su = 0.0;
      for (Index k = 0; k < d_y; ++k) {
        const double diff = tgt(j, k) - src(i, k);
        sy += diff * diff;
      }
      for (Index k = d_y; k < d; ++k) {
        const double diff = tgt(j, k) - src(i, k);
        su += diff * diff;
      }
      if (spec.kind == CostKind::cot_epsilon)
        c(i, j) = detail::lift(sy, spec.power) + spec.epsilon * detail::lift(su, spec.power);
      else
        c(i, j) = detail::lift(sy + su, spec.power);
    }
  }
  return c;
}

inline RowMatrix cost_matrix(const DiscreteMeasure& src, const DiscreteMeasure& tgt, const CostSpec& spec) {
  require(src.d_y == tgt.d_y && src.d_u == tgt.d_u, "cost_matrix: measures disagree on (d_y, d_u)");
  return cost_matrix(src.points, tgt.points, src.d_y, spec);
}

/// |x_i - z_j|^p for two point sets of equal dimension (no Y/U split).
inline RowMatrix distance_matrix(const RowMatrix& x, const RowMatrix& z, int p = 2) {
  return cost_matrix(x, z, x.cols(), CostSpec::euclidean(p));
}

}  // namespace cotfm::ot
