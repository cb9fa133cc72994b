#pragma once

#include "cotfm/core.hpp"

#include <algorithm>
#include <cfloat>
#include <vector>

namespace cotfm::ot {

/// Primal network simplex on the complete bipartite transportation graph.
///
/// The basis is a spanning tree over n row nodes and m column nodes (n + m - 1
/// cells, degenerate zeros included). Pricing uses block search; after a run
/// of degenerate pivots it switches to Bland's lowest-index rule, which cannot
/// cycle. Returns the optimal flow matrix.
class NetworkSimplex {
 public:
  NetworkSimplex(const RowMatrix& cost, const Vector& a, const Vector& b)
      : c_(cost), a_(a), b_(b), n_(cost.rows()), m_(cost.cols()) {
    require(a.size() == n_ && b.size() == m_, "NetworkSimplex: marginal sizes do not match cost matrix");
    double cmax = 0.0;
    for (Index i = 0; i < n_; ++i)
      for (Index j = 0; j < m_; ++j) cmax = std::max(cmax, std::abs(c_(i, j)));
    tol_ = 64.0 * DBL_EPSILON * std::max(cmax, 1e-300);
    const double wmax = std::max(a.size() ? a.maxCoeff() : 0.0, b.size() ? b.maxCoeff() : 0.0);
    flow_tol_ = 16.0 * DBL_EPSILON * wmax;
  }

  RowMatrix solve(long max_pivots = 0) {
    initial_basis();
    if (max_pivots <= 0) max_pivots = 200L * (n_ + m_) * std::max<Index>(8, n_ + m_) + 1000;
    int degenerate_run = 0;
    for (pivots_ = 0;; ++pivots_) {
      if (pivots_ >= max_pivots) throw NumericError("network simplex: pivot limit exceeded");
      compute_potentials();
      const bool bland = degenerate_run > 2 * (n_ + m_);
      Index ei = -1, ej = -1;
      if (!(bland ? price_bland(ei, ej) : price_block(ei, ej))) break;
      const double theta = pivot(ei, ej);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }
    RowMatrix flow = RowMatrix::Zero(n_, m_);
    for (const auto& cell : basis_) flow(cell.i, cell.j) += cell.x;
    return flow;
  }

  long pivots() const { return pivots_; }

 private:
  struct Cell {
    Index i, j;
    double x;
  };

  void initial_basis() {
    // North-west corner rule; advancing exactly one index per step yields a
    // spanning tree with n + m - 1 cells.
    basis_.clear();
    std::vector<double> ra(a_.data(), a_.data() + n_), rb(b_.data(), b_.data() + m_);
    Index i = 0, j = 0;
    while (true) {
      const double f = std::max(0.0, std::min(ra[i], rb[j]));
      basis_.push_back({i, j, f});
      ra[i] = snap(ra[i] - f);
      rb[j] = snap(rb[j] - f);
      if (i == n_ - 1 && j == m_ - 1) break;
      if (i == n_ - 1)
        ++j;
      else if (j == m_ - 1)
        ++i;
      else if (ra[i] <= rb[j])
        ++i;
      else
        ++j;
    }
    // Absorb rounding residue in the final cell.
    basis_.back().x = std::max(0.0, basis_.back().x + std::min(ra[n_ - 1], rb[m_ - 1]));
  }

  // Differences of masses that agree up to rounding are set to exactly zero,
  // so degenerate problems do not leak residue onto costly cells.
  double snap(double x) const { return x <= flow_tol_ ? 0.0 : x; }

  // Node ids: rows 0..n-1, columns n..n+m-1.
  void compute_potentials() {
    const Index nodes = n_ + m_;
    head_.assign(nodes + 1, 0);
    for (const auto& c : basis_) {
      ++head_[c.i + 1];
      ++head_[n_ + c.j + 1];
    }
    for (Index k = 0; k < nodes; ++k) head_[k + 1] += head_[k];
    adj_.resize(2 * basis_.size());
    std::vector<Index> fill(head_.begin(), head_.end() - 1);
    for (Index e = 0; e < static_cast<Index>(basis_.size()); ++e) {
      adj_[fill[basis_[e].i]++] = e;
      adj_[fill[n_ + basis_[e].j]++] = e;
    }
    pot_.assign(nodes, 0.0);
    parent_.assign(nodes, -1);
    parent_cell_.assign(nodes, -1);
    depth_.assign(nodes, -1);
    std::vector<Index> queue{0};
    queue.reserve(nodes);
    depth_[0] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const Index node = queue[q];
      for (Index k = head_[node]; k < head_[node + 1]; ++k) {
        const Index e = adj_[k];
        const Cell& c = basis_[e];
        const Index other = node < n_ ? n_ + c.j : c.i;
        if (depth_[other] >= 0) continue;
        depth_[other] = depth_[node] + 1;
        parent_[other] = node;
        parent_cell_[other] = e;
        // u_i + v_j = c_ij on basic cells.
        pot_[other] = c_(c.i, c.j) - pot_[node];
        queue.push_back(other);
      }
    }
    if (static_cast<Index>(queue.size()) != nodes) throw NumericError("network simplex: basis is not a spanning tree");
  }

  double reduced(Index i, Index j) const { return c_(i, j) - pot_[i] - pot_[n_ + j]; }

  bool price_block(Index& ei, Index& ej) {
    const Index total = n_ * m_;
    const Index block = std::max<Index>(static_cast<Index>(std::sqrt(static_cast<double>(total))), 16);
    double best = -tol_;
    Index scanned = 0;
    while (scanned < total) {
      const Index end = std::min(scanned + block, total);
      for (; scanned < end; ++scanned) {
        const Index k = (cursor_ + scanned) % total;
        const Index i = k / m_, j = k % m_;
        const double r = reduced(i, j);
        if (r < best) {
          best = r;
          ei = i;
          ej = j;
        }
      }
      if (ei >= 0) {
        cursor_ = (ei * m_ + ej + 1) % total;
        return true;
      }
    }
    return false;
  }

  bool price_bland(Index& ei, Index& ej) const {
    for (Index i = 0; i < n_; ++i)
      for (Index j = 0; j < m_; ++j)
        if (reduced(i, j) < -tol_) {
          ei = i;
          ej = j;
          return true;
        }
    return false;
  }

  // Pushes flow around the cycle closed by entering cell (i, j). Returns theta.
  double pivot(Index i, Index j) {
    std::vector<Index> up_from_col, up_from_row;
    Index a = n_ + j, b = i;
    while (depth_[a] > depth_[b]) {
      up_from_col.push_back(parent_cell_[a]);
      a = parent_[a];
    }
    while (depth_[b] > depth_[a]) {
      up_from_row.push_back(parent_cell_[b]);
      b = parent_[b];
    }
    while (a != b) {
      up_from_col.push_back(parent_cell_[a]);
      a = parent_[a];
      up_from_row.push_back(parent_cell_[b]);
      b = parent_[b];
    }
    // Cycle order: entering (+), column side up to the apex, then down the row
    // side. Signs alternate starting with '-' after the entering cell.
    std::vector<Index> cycle(up_from_col);
    cycle.insert(cycle.end(), up_from_row.rbegin(), up_from_row.rend());
    double theta = kInf;
    Index leave = -1;
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const Cell& c = basis_[cycle[k]];
      const bool better = c.x < theta ||
                          (c.x == theta && leave >= 0 &&
                           (c.i < basis_[leave].i || (c.i == basis_[leave].i && c.j < basis_[leave].j)));
      if (better) {
        theta = c.x;
        leave = cycle[k];
      }
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      Cell& c = basis_[cycle[k]];
      c.x = (k % 2 == 0) ? snap(c.x - theta) : c.x + theta;
    }
    basis_[leave] = {i, j, theta};
    return theta;
  }

  const RowMatrix& c_;
  const Vector& a_;
  const Vector& b_;
  Index n_, m_;
  double tol_ = 0.0;
  double flow_tol_ = 0.0;
  long pivots_ = 0;
  Index cursor_ = 0;
  std::vector<Cell> basis_;
  std::vector<Index> head_, adj_, parent_, parent_cell_, depth_;
  std::vector<double> pot_;
};

}  // namespace cotfm::ot
