#pragma once

#include "cotfm/flow/checkpoint.hpp"
#include "cotfm/flow/mlp.hpp"
#include "cotfm/ode/integrate.hpp"
#include "cotfm/rng.hpp"

#include <functional>

namespace cotfm::ode {

/// Draws n source u-values (n x d_u).
using USampler = std::function<RowMatrix(Index n, Rng& rng)>;

inline USampler standard_normal_u(Index d_u) {
  return [d_u](Index n, Rng& rng) { return normal_matrix(rng, n, d_u); };
}

/// Integrates the learned field for a batch of (y, u0) rows; y stays fixed.
inline RowMatrix push_forward(const flow::VectorFieldParams& p, const RowMatrix& y, const RowMatrix& u0,
                              const IntegratorConfig& cfg, std::vector<RowMatrix>* trajectory = nullptr) {
  require(y.rows() == u0.rows(), "push_forward: y and u0 batch sizes differ");
  require(y.cols() == p.d_y && u0.cols() == p.d_u, "push_forward: dimension mismatch");
  auto field = [&](double t, const RowMatrix& u) { return flow::velocity_batch(p, t, y, u); };
  return integrate(field, u0, cfg, trajectory);
}

/// Single-sample form: returns u1 for the initial condition (y, u0).
inline Vector integrate(const flow::VectorFieldParams& p, const Vector& y, const Vector& u0,
                        const IntegratorConfig& cfg) {
  return push_forward(p, RowMatrix(y.transpose()), RowMatrix(u0.transpose()), cfg).row(0).transpose();
}

/// n conditional samples of u given a single y, all in model coordinates.
inline RowMatrix sample_posterior(const flow::VectorFieldParams& p, const Vector& y, Index n,
                                  const USampler& source_u, const IntegratorConfig& cfg, Rng& rng) {
  require(n >= 0, "sample_posterior: n must be >= 0");
  require(y.size() == p.d_y, "sample_posterior: y has the wrong dimension");
  if (n == 0) return RowMatrix(0, p.d_u);
  const RowMatrix u0 = source_u(n, rng);
  require(u0.rows() == n && u0.cols() == p.d_u, "sample_posterior: source sampler returned the wrong shape");
  const RowMatrix ys = y.transpose().replicate(n, 1);
  return push_forward(p, ys, u0, cfg);
}

/// One u-sample per row of `y_raw` for a trained checkpoint. Inputs and
/// outputs are in data coordinates; the source is N(0, I) in model
/// coordinates.
inline RowMatrix sample_conditional(const flow::Checkpoint& ck, const RowMatrix& y_raw, const IntegratorConfig& cfg,
                                    Rng& rng) {
  const auto& p = ck.params;
  require(y_raw.cols() == p.d_y, "sample_conditional: y has the wrong dimension");
  if (y_raw.rows() == 0) return RowMatrix(0, p.d_u);
  const RowMatrix y = ck.standardizer.apply_y(y_raw);
  const RowMatrix u0 = normal_matrix(rng, y.rows(), p.d_u);
  return ck.standardizer.invert_u(push_forward(p, y, u0, cfg));
}

/// n posterior samples for a single observation, data coordinates.
inline RowMatrix sample_conditional(const flow::Checkpoint& ck, const Vector& y_raw, Index n,
                                    const IntegratorConfig& cfg, Rng& rng) {
  require(n >= 0, "sample_conditional: n must be >= 0");
  return sample_conditional(ck, RowMatrix(y_raw.transpose().replicate(n, 1)), cfg, rng);
}

}  // namespace cotfm::ode
