#pragma once

#include "cotfm/core.hpp"

#include <vector>

namespace cotfm::ot {

/// Minimum-cost perfect matching on a dense square cost matrix.
///
/// Shortest augmenting path method with row/column potentials: each row is
/// inserted in turn and a Dijkstra search over reduced costs finds the
/// cheapest augmenting path to a free column. O(n^3) worst case, much less on
/// typical dense instances. Returns col_for_row.
///
/// Ties between equally short paths prefer an unassigned column, then the
/// lowest column index, so the result is a deterministic function of `cost`.
inline std::vector<Index> solve_assignment(const RowMatrix& cost) {
  const Index n = cost.rows();
  require(cost.cols() == n, "solve_assignment: cost matrix must be square");
  require(cost.allFinite(), "solve_assignment: non-finite cost entry");
  std::vector<Index> col_for_row(n, -1), row_for_col(n, -1);
  if (n == 0) return col_for_row;

  std::vector<double> u(n, 0.0), v(n, 0.0), dist(n);
  std::vector<Index> pred(n), remaining(n);
  std::vector<char> row_seen(n), col_seen(n);

  for (Index cur = 0; cur < n; ++cur) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(row_seen.begin(), row_seen.end(), 0);
    std::fill(col_seen.begin(), col_seen.end(), 0);
    for (Index k = 0; k < n; ++k) remaining[k] = k;
    Index n_remaining = n;

    double min_val = 0.0;
    Index sink = -1;
    Index i = cur;
    while (sink < 0) {
      row_seen[i] = 1;
      const double* ci = cost.row(i).data();
      const double ui = u[i];
      Index best = -1;
      double lowest = kInf;
      for (Index k = 0; k < n_remaining; ++k) {
        const Index j = remaining[k];
        const double r = min_val + ci[j] - ui - v[j];
        if (r < dist[j]) {
          pred[j] = i;
          dist[j] = r;
        }
        if (best < 0 || dist[j] < lowest) {
          lowest = dist[j];
          best = k;
        } else if (dist[j] == lowest) {
          const Index jb = remaining[best];
          const bool free_j = row_for_col[j] < 0, free_b = row_for_col[jb] < 0;
          if ((free_j && !free_b) || (free_j == free_b && j < jb)) best = k;
        }
      }
      if (!(lowest < kInf)) throw NumericError("solve_assignment: infeasible cost matrix");
      min_val = lowest;
      const Index j = remaining[best];
      col_seen[j] = 1;
      remaining[best] = remaining[--n_remaining];
      if (row_for_col[j] < 0)
        sink = j;
      else
        i = row_for_col[j];
    }

    // Dual update keeps reduced costs nonnegative and zero on matched pairs.
    u[cur] += min_val;
    for (Index r = 0; r < n; ++r)
      if (row_seen[r] && r != cur) u[r] += min_val - dist[col_for_row[r]];
    for (Index c = 0; c < n; ++c)
      if (col_seen[c]) v[c] -= min_val - dist[c];

    Index j = sink;
    while (true) {
      const Index r = pred[j];
      row_for_col[j] = r;
      std::swap(col_for_row[r], j);
      if (r == cur) break;
    }
  }
  return col_for_row;
}

}  // namespace cotfm::ot
