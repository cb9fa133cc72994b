#pragma once

#include "cotfm/core.hpp"
#include "cotfm/rng.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace cotfm::data {

/// Lotka-Volterra parameters u = (alpha, beta, gamma, delta):
///   dp1/dt = alpha p1 - beta p1 p2,   dp2/dt = -gamma p2 + delta p1 p2.
struct LvParams {
  double alpha = 0.0, beta = 0.0, gamma = 0.0, delta = 0.0;

  void validate() const {
    require(alpha > 0 && beta > 0 && gamma > 0 && delta > 0, "LvParams: all parameters must be > 0");
  }
  Vector to_vector() const {
    Vector v(4);
    v << alpha, beta, gamma, delta;
    return v;
  }
  static LvParams from_vector(const Vector& v) {
    require(v.size() == 4, "LvParams: expected 4 values");
    return {v(0), v(1), v(2), v(3)};
  }
  static LvParams from_log(const Vector& log_u) { return from_vector(log_u.array().exp().matrix()); }
};

inline constexpr LvParams kLvBenchmarkParams{0.83, 0.041, 1.08, 0.04};
inline const Vector& lv_prior_mean() {
  static const Vector m = (Vector(4) << -0.125, -3.0, -0.125, -3.0).finished();
  return m;
}
inline constexpr double kLvPriorVariance = 0.5;
inline constexpr double kLvNoiseVariance = 0.1;
inline constexpr int kLvObsDim = 22;

inline std::vector<double> lv_time_grid() {
  std::vector<double> t;
  for (int k = 0; k <= 10; ++k) t.push_back(2.0 * k);
  return t;
}

/// Trajectory at the grid times, flattened time-major as
/// (p1(t0), p2(t0), p1(t1), p2(t1), ...).
struct LvTrajectory {
  Vector z;
  bool floored = false;  // some state was clamped to the positivity floor
};

inline constexpr double kLvFloor = 1e-10;
inline constexpr double kLvStep = 2e-3;

/// Fixed-step RK4 solution started from p0 at t = 0 and sampled at the
/// nondecreasing times in `t_grid`. States below 1e-10 are clamped to it and
/// the trajectory is flagged.
inline LvTrajectory lv_simulate(const LvParams& u, std::array<double, 2> p0 = {30.0, 1.0},
                                const std::vector<double>& t_grid = lv_time_grid(), double h = kLvStep) {
  u.validate();
  require(h > 0.0, "lv_simulate: step h must be > 0");
  require(!t_grid.empty() && t_grid.front() >= 0.0, "lv_simulate: time grid must be nonempty and start at t >= 0");
  auto rhs = [&](double p1, double p2, double& d1, double& d2) {
    d1 = u.alpha * p1 - u.beta * p1 * p2;
    d2 = -u.gamma * p2 + u.delta * p1 * p2;
  };
  LvTrajectory out;
  out.z = Vector(2 * static_cast<Index>(t_grid.size()));
  double p1 = p0[0], p2 = p0[1];
  long done = 0;
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    const double steps_f = t_grid[g] / h;
    const long target = std::lround(steps_f);
    require(std::abs(steps_f - static_cast<double>(target)) <= 1e-9 * std::max(1.0, steps_f),
            "lv_simulate: h must divide every grid time");
    require(target >= done, "lv_simulate: time grid must be nondecreasing");
    for (; done < target; ++done) {
      double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
      rhs(p1, p2, k1a, k1b);
      rhs(p1 + 0.5 * h * k1a, p2 + 0.5 * h * k1b, k2a, k2b);
      rhs(p1 + 0.5 * h * k2a, p2 + 0.5 * h * k2b, k3a, k3b);
      rhs(p1 + h * k3a, p2 + h * k3b, k4a, k4b);
      p1 += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
      p2 += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
      if (!(p1 >= kLvFloor)) {  // also catches NaN
        p1 = kLvFloor;
        out.floored = true;
      }
      if (!(p2 >= kLvFloor)) {  // also catches NaN
        p2 = kLvFloor;
        out.floored = true;
      }
    }
    out.z(2 * static_cast<Index>(g)) = p1;
    out.z(2 * static_cast<Index>(g) + 1) = p2;
  }
  return out;
}

/// First integral V(p) = delta p1 - gamma log p1 + beta p2 - alpha log p2.
inline double lv_first_integral(const LvParams& u, double p1, double p2) {
  return u.delta * p1 - u.gamma * std::log(p1) + u.beta * p2 - u.alpha * std::log(p2);
}

/// Log-normal observation: log y = log z + noise_sd * xi.
inline Vector lv_observe(const Vector& z, Rng& rng, double noise_sd = std::sqrt(kLvNoiseVariance)) {
  require(noise_sd >= 0.0, "lv_observe: noise_sd must be >= 0");
  require((z.array() > 0.0).all(), "lv_observe: trajectory must be positive");
  if (noise_sd == 0.0) return z;
  Vector y(z.size());
  for (Index k = 0; k < z.size(); ++k) y(k) = z(k) * std::exp(noise_sd * standard_normal(rng));
  return y;
}

/// n prior draws of log u ~ N(m, 0.5 I), as rows of log-parameters.
inline RowMatrix lv_prior_sample_log(Index n, Rng& rng) {
  require(n >= 0, "lv_prior_sample: n must be >= 0");
  RowMatrix out(n, 4);
  const double sd = std::sqrt(kLvPriorVariance);
  for (Index k = 0; k < n; ++k)
    for (Index c = 0; c < 4; ++c) out(k, c) = lv_prior_mean()(c) + sd * standard_normal(rng);
  return out;
}

inline std::vector<LvParams> lv_prior_sample(Index n, Rng& rng) {
  const RowMatrix logs = lv_prior_sample_log(n, rng);
  std::vector<LvParams> out;
  for (Index k = 0; k < n; ++k) out.push_back(LvParams::from_log(logs.row(k).transpose()));
  return out;
}

/// Joint pairs (y, u) in data coordinates, both positive.
struct LvDataset {
  RowMatrix y;  // n x 22
  RowMatrix u;  // n x 4
  Index rejected = 0;

  /// Rows (log y, log u): the coordinates the model is trained in.
  RowMatrix log_joint() const {
    RowMatrix out(y.rows(), y.cols() + u.cols());
    out.leftCols(y.cols()) = y.array().log().matrix();
    out.rightCols(u.cols()) = u.array().log().matrix();
    return out;
  }
};

/// n pairs drawn from prior x simulator x noise. Sample k uses its own
/// stream derived from (seed, k). Draws whose simulation hits the positivity
/// floor or is non-finite are redrawn and counted in `rejected`.
inline LvDataset lv_dataset(Index n, std::uint64_t seed) {
  require(n >= 0, "lv_dataset: n must be >= 0");
  LvDataset d{RowMatrix(n, kLvObsDim), RowMatrix(n, 4), 0};
  for (Index k = 0; k < n; ++k) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(k));
    while (true) {
      const Vector log_u = lv_prior_sample_log(1, rng).row(0).transpose();
      const LvParams u = LvParams::from_log(log_u);
      const LvTrajectory traj = lv_simulate(u);
      if (traj.floored || !traj.z.allFinite()) {
        ++d.rejected;
        continue;
      }
      const Vector y = lv_observe(traj.z, rng);
      if (!y.allFinite() || !(y.array() > 0.0).all()) {
        ++d.rejected;
        continue;
      }
      d.y.row(k) = y.transpose();
      d.u.row(k) = u.to_vector().transpose();
      break;
    }
  }
  return d;
}

}  // namespace cotfm::data
