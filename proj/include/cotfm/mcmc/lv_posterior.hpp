#pragma once

#include "cotfm/core.hpp"
#include "cotfm/data/lv.hpp"

#include <cmath>
#include <numbers>

namespace cotfm::mcmc {

/// log N(x; mean, var I), normalization included.
inline double log_normal_iso(const Vector& x, const Vector& mean, double var) {
  const double n = static_cast<double>(x.size());
  return -0.5 * (x - mean).squaredNorm() / var - 0.5 * n * std::log(2.0 * std::numbers::pi * var);
}

inline double lv_log_prior(const Vector& log_params) {
  require(log_params.size() == 4, "lv_log_prior: expected 4 log-parameters");
  return log_normal_iso(log_params, data::lv_prior_mean(), data::kLvPriorVariance);
}

/// Sum over the 22 observations of log N(log y_i; log z_i(u), 0.1).
/// Returns -inf when the simulation leaves the positive orthant or blows up.
inline double lv_log_likelihood(const Vector& log_params, const Vector& y_obs) {
  require(log_params.size() == 4, "lv_log_likelihood: expected 4 log-parameters");
  require(y_obs.size() == data::kLvObsDim, "lv_log_likelihood: expected 22 observations");
  require(log_params.allFinite() && y_obs.allFinite(), "lv_log_likelihood: inputs must be finite");
  require((y_obs.array() > 0.0).all(), "lv_log_likelihood: observations must be positive");
  const Vector u = log_params.array().exp().matrix();
  if (!u.allFinite() || !(u.array() > 0.0).all()) return -kInf;
  const data::LvTrajectory traj = data::lv_simulate(data::LvParams::from_vector(u));
  if (traj.floored || !traj.z.allFinite()) return -kInf;
  const double ll = log_normal_iso(y_obs.array().log().matrix(), traj.z.array().log().matrix(), data::kLvNoiseVariance);
  return std::isfinite(ll) ? ll : -kInf;
}

inline double lv_log_posterior(const Vector& log_params, const Vector& y_obs) {
  const double ll = lv_log_likelihood(log_params, y_obs);
  return ll == -kInf ? -kInf : lv_log_prior(log_params) + ll;
}

}  // namespace cotfm::mcmc
