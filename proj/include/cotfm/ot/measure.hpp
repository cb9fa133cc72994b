#pragma once

#include "cotfm/core.hpp"

#include <string>

namespace cotfm::ot {

/// Weighted point cloud on a product space Y x U. Each row of `points` is one
/// atom laid out as (y, u) with y occupying the first `d_y` columns.
struct DiscreteMeasure {
  RowMatrix points;
  Vector weights;
  Index d_y = 1;
  Index d_u = 1;

  DiscreteMeasure() = default;
  DiscreteMeasure(RowMatrix pts, Vector w, Index dy) : points(std::move(pts)), weights(std::move(w)), d_y(dy) {
    d_u = points.cols() - d_y;
    validate();
  }

  /// Equal weights 1/n on every row.
  static DiscreteMeasure uniform(RowMatrix pts, Index dy) {
    const Index n = pts.rows();
    require(n > 0, "DiscreteMeasure: empty point set");
    Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
    return DiscreteMeasure(std::move(pts), std::move(w), dy);
  }

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }

  auto y(Index i) const { return points.row(i).head(d_y); }
  auto u(Index i) const { return points.row(i).tail(d_u); }
  auto ys() const { return points.leftCols(d_y); }
  auto us() const { return points.rightCols(d_u); }

  void validate() const {
    require(points.rows() > 0, "DiscreteMeasure: empty point set");
    require(d_y >= 1 && d_u >= 1, "DiscreteMeasure: need d_y >= 1 and d_u >= 1");
    require(points.cols() == d_y + d_u, "DiscreteMeasure: point dimension != d_y + d_u");
    require(weights.size() == points.rows(), "DiscreteMeasure: weights length != number of points");
    require(points.allFinite(), "DiscreteMeasure: non-finite coordinates");
    require((weights.array() >= 0.0).all(), "DiscreteMeasure: negative weight");
    require(std::abs(weights.sum() - 1.0) <= 1e-12, "DiscreteMeasure: weights must sum to 1");
  }
};

/// Checks that every weight vector entry is nonnegative and the total is one.
inline void validate_probability(const Vector& w, const std::string& name) {
  require(w.size() > 0, name + ": empty weight vector");
  require(w.allFinite() && (w.array() >= 0.0).all(), name + ": weights must be finite and nonnegative");
  require(std::abs(w.sum() - 1.0) <= 1e-9, name + ": weights must sum to 1");
}

inline bool is_uniform(const Vector& w) {
  const double target = 1.0 / static_cast<double>(w.size());
  return ((w.array() - target).abs() <= 1e-14).all();
}

}  // namespace cotfm::ot
