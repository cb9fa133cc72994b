#pragma once

#include "cotfm/core.hpp"
#include "cotfm/ot/measure.hpp"
#include "cotfm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

namespace cotfm::data {

/// Four 2D joint distributions with Y = U = R. Each generated row is (y, u):
/// y is the vertical (conditioning) coordinate, u the horizontal one.
struct Synthetic2DSpec {
  std::string name = "moons";
  Index n = 1000;
  std::uint64_t seed = 0;

  static const std::vector<std::string>& names() {
    static const std::vector<std::string> v{"checkerboard", "moons", "circles", "swissroll"};
    return v;
  }

  void validate() const {
    require(n >= 1, "Synthetic2DSpec: n must be >= 1");
    require(std::find(names().begin(), names().end(), name) != names().end(),
            "Synthetic2DSpec: unknown dataset '" + name + "' (expected checkerboard, moons, circles or swissroll)");
  }

  nlohmann::json to_json() const { return {{"name", name}, {"n", n}, {"seed", seed}}; }
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, Index n, bool endpoint = true) {
  std::vector<double> v(static_cast<std::size_t>(n));
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (hi - lo) / static_cast<double>(endpoint ? n - 1 : n);
  for (Index k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = lo + step * static_cast<double>(k);
  return v;
}

// Rows are (horizontal, vertical) before the (y, u) swap.
inline RowMatrix moons_xy(Index n, Rng& rng) {
  const Index n_out = n / 2, n_in = n - n_out;
  RowMatrix x(n, 2);
  const auto a = linspace(0.0, std::numbers::pi, n_out), b = linspace(0.0, std::numbers::pi, n_in);
  for (Index k = 0; k < n_out; ++k) x.row(k) << std::cos(a[k]), std::sin(a[k]);
  for (Index k = 0; k < n_in; ++k) x.row(n_out + k) << 1.0 - std::cos(b[k]), 1.0 - std::sin(b[k]) - 0.5;
  x += 0.05 * normal_matrix(rng, n, 2);
  // Standard scaling with mean (0.5, 0.25) and scale (0.75, 0.25).
  x.col(0) = (x.col(0).array() - 0.5) / 0.75;
  x.col(1) = (x.col(1).array() - 0.25) / 0.25;
  return x;
}

inline RowMatrix circles_xy(Index n, Rng& rng) {
  const double factor = 0.5;
  const Index n_out = n / 2, n_in = n - n_out;
  RowMatrix x(n, 2);
  const auto a = linspace(0.0, 2.0 * std::numbers::pi, n_out, false);
  const auto b = linspace(0.0, 2.0 * std::numbers::pi, n_in, false);
  for (Index k = 0; k < n_out; ++k) x.row(k) << std::cos(a[k]), std::sin(a[k]);
  for (Index k = 0; k < n_in; ++k) x.row(n_out + k) << factor * std::cos(b[k]), factor * std::sin(b[k]);
  x += 0.05 * normal_matrix(rng, n, 2);
  return x;
}

inline RowMatrix swissroll_xy(Index n, Rng& rng) {
  // Roll plane (x, z) of the 3D swiss roll, noise 0.75, divided by 12.
  RowMatrix x(n, 2);
  for (Index k = 0; k < n; ++k) {
    const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * uniform01(rng));
    x.row(k) << t * std::cos(t), t * std::sin(t);
  }
  x += 0.75 * normal_matrix(rng, n, 2);
  return x / 12.0;
}

inline RowMatrix checkerboard_xy(Index n, Rng& rng) {
  // Uniform on the 8 cells (i, j) of a 4x4 board over [-2, 2]^2 with i + j even.
  RowMatrix x(n, 2);
  for (Index k = 0; k < n; ++k) {
    const Index cell = uniform_index(rng, 8);
    const Index row = cell / 2;
    const Index col = 2 * (cell % 2) + (row % 2);
    x.row(k) << -2.0 + static_cast<double>(col) + uniform01(rng), -2.0 + static_cast<double>(row) + uniform01(rng);
  }
  return x;
}

inline void shuffle_rows(RowMatrix& x, Rng& rng) {
  for (Index k = x.rows() - 1; k > 0; --k) x.row(k).swap(x.row(uniform_index(rng, k + 1)));
}

}  // namespace detail

/// n joint samples with rows (y, u). Pure function of the spec.
inline RowMatrix sample_2d_points(const Synthetic2DSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, 0x2dULL);
  RowMatrix xy;
  if (spec.name == "moons") xy = detail::moons_xy(spec.n, rng);
  else if (spec.name == "circles") xy = detail::circles_xy(spec.n, rng);
  else if (spec.name == "swissroll") xy = detail::swissroll_xy(spec.n, rng);
  else xy = detail::checkerboard_xy(spec.n, rng);
  detail::shuffle_rows(xy, rng);
  RowMatrix out(spec.n, 2);
  out.col(0) = xy.col(1);
  out.col(1) = xy.col(0);
  return out;
}

inline ot::DiscreteMeasure sample_2d(const Synthetic2DSpec& spec) {
  return ot::DiscreteMeasure::uniform(sample_2d_points(spec), 1);
}

/// Product source: y from the target's Y-marginal, u ~ N(0, I).
/// This form resamples y from a finite target by its weights.
inline ot::DiscreteMeasure build_source(const ot::DiscreteMeasure& target, Index n, std::uint64_t seed) {
  target.validate();
  require(n >= 1, "build_source: n must be >= 1");
  Rng rng = make_rng(seed, 0x50ULL);
  std::vector<double> cum(static_cast<std::size_t>(target.size()));
  double acc = 0.0;
  for (Index k = 0; k < target.size(); ++k) cum[static_cast<std::size_t>(k)] = acc += target.weights(k);
  RowMatrix pts(n, target.dim());
  for (Index k = 0; k < n; ++k) {
    const double x = uniform01(rng) * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), x);
    if (it == cum.end()) --it;
    pts.row(k).head(target.d_y) = target.y(static_cast<Index>(it - cum.begin())).transpose();
    for (Index c = target.d_y; c < target.dim(); ++c) pts(k, c) = standard_normal(rng);
  }
  return ot::DiscreteMeasure::uniform(std::move(pts), target.d_y);
}

/// Product source for a synthetic dataset: y from a fresh draw of the
/// dataset (a derived seed), u ~ N(0, 1).
inline ot::DiscreteMeasure build_source(const Synthetic2DSpec& target, Index n, std::uint64_t seed) {
  Synthetic2DSpec fresh = target;
  fresh.n = n;
  fresh.seed = mix64(seed ^ 0x5eed5eedULL);
  RowMatrix pts = sample_2d_points(fresh);
  Rng rng = make_rng(seed, 0x51ULL);
  for (Index k = 0; k < n; ++k) pts(k, 1) = standard_normal(rng);
  return ot::DiscreteMeasure::uniform(std::move(pts), 1);
}

}  // namespace cotfm::data
