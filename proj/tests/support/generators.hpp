#pragma once

// Random instance generators shared by unit and acceptance tests.

#include "cotfm/ot/measure.hpp"
#include "cotfm/rng.hpp"

#include <vector>

namespace cotfm::gen {

/// Layout shared by a family of measures: the same y atoms with the same
/// group masses, so every member has an identical Y-marginal.
struct SharedY {
  Index d_y = 1;
  Index d_u = 1;
  Index atoms_per_group = 3;
  RowMatrix y_values;  // one row per group
  Vector group_mass;   // sums to 1
};

inline SharedY random_shared_y(Rng& rng, bool uniform_groups) {
  SharedY s;
  s.d_y = 1 + uniform_index(rng, 2);
  s.d_u = 1 + uniform_index(rng, 2);
  s.atoms_per_group = 2 + uniform_index(rng, 3);
  const Index groups = 2 + uniform_index(rng, 2);
  // Redraw until groups are at least 0.25 apart so a tiny eps forbids
  // cross-group transport.
  auto min_gap = [](const RowMatrix& y) {
    double gap = kInf;
    for (Index a = 0; a < y.rows(); ++a)
      for (Index b = a + 1; b < y.rows(); ++b) gap = std::min(gap, (y.row(a) - y.row(b)).norm());
    return gap;
  };
  do {
    s.y_values = normal_matrix(rng, groups, s.d_y);
  } while (min_gap(s.y_values) < 0.25);
  s.group_mass = Vector::Constant(groups, 1.0 / static_cast<double>(groups));
  if (!uniform_groups) {
    for (Index g = 0; g < groups; ++g) s.group_mass(g) = 0.2 + uniform01(rng);
    s.group_mass /= s.group_mass.sum();
  }
  return s;
}

/// A measure on the shared layout with fresh random u atoms.
inline ot::DiscreteMeasure random_member(Rng& rng, const SharedY& s, double u_scale = 2.0) {
  const Index groups = s.y_values.rows(), k = s.atoms_per_group;
  RowMatrix pts(groups * k, s.d_y + s.d_u);
  Vector w(groups * k);
  for (Index g = 0; g < groups; ++g)
    for (Index a = 0; a < k; ++a) {
      const Index r = g * k + a;
      pts.row(r).head(s.d_y) = s.y_values.row(g);
      for (Index c = 0; c < s.d_u; ++c) pts(r, s.d_y + c) = u_scale * standard_normal(rng);
      w(r) = s.group_mass(g) / static_cast<double>(k);
    }
  return ot::DiscreteMeasure(std::move(pts), std::move(w), s.d_y);
}

/// Counterexample pair: eta_k = 1/2 (d(y0,u0) + d(y1,uk)), nu_k = 1/2 (d(y1,u0) + d(y0,uk))
/// with uk = (k + 1) u0 and scalar y, u.
inline std::pair<ot::DiscreteMeasure, ot::DiscreteMeasure> counterexample(double k, double u0, double y0, double y1) {
  RowMatrix e(2, 2), v(2, 2);
  e << y0, u0, y1, (k + 1.0) * u0;
  v << y1, u0, y0, (k + 1.0) * u0;
  return {ot::DiscreteMeasure::uniform(e, 1), ot::DiscreteMeasure::uniform(v, 1)};
}

}  // namespace cotfm::gen
