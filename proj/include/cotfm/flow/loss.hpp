#pragma once

#include "cotfm/flow/mlp.hpp"

#include <string>
#include <vector>

namespace cotfm::flow {

/// One point on the noisy straight path between a coupled pair.
struct PathSample {
  double t = 0.0;
  Vector z_t;       // point in Y x U
  Vector target_v;  // z1 - z0, both blocks
};

/// z_t = t z1 + (1 - t) z0 + sigma xi with xi ~ N(0, I); target z1 - z0.
inline PathSample sample_path_point(const Vector& z0, const Vector& z1, double t, double sigma, Rng& rng) {
  require(z0.size() == z1.size(), "sample_path_point: endpoints differ in dimension");
  require(t >= 0.0 && t <= 1.0, "sample_path_point: t must lie in [0,1]");
  require(sigma >= 0.0, "sample_path_point: sigma must be >= 0");
  PathSample s;
  s.t = t;
  s.z_t = t * z1 + (1.0 - t) * z0;
  if (sigma > 0.0)
    for (Index k = 0; k < s.z_t.size(); ++k) s.z_t(k) += sigma * standard_normal(rng);
  s.target_v = z1 - z0;
  return s;
}

/// A batch of path samples in row layout, ready for the network.
struct PathBatch {
  Vector t;
  RowMatrix y;         // B x d_y, Y block of z_t
  RowMatrix u;         // B x d_u, U block of z_t
  RowMatrix target_u;  // B x d_u, U block of z1 - z0

  Index size() const { return t.size(); }
};

inline PathBatch make_batch(const std::vector<PathSample>& samples, Index d_y) {
  require(!samples.empty(), "fm_loss: empty batch");
  const Index bsz = static_cast<Index>(samples.size());
  const Index d = samples.front().z_t.size(), d_u = d - d_y;
  require(d_y >= 1 && d_u >= 1, "make_batch: invalid coordinate split");
  PathBatch b{Vector(bsz), RowMatrix(bsz, d_y), RowMatrix(bsz, d_u), RowMatrix(bsz, d_u)};
  for (Index k = 0; k < bsz; ++k) {
    const PathSample& s = samples[static_cast<std::size_t>(k)];
    require(s.z_t.size() == d && s.target_v.size() == d, "make_batch: inconsistent sample dimensions");
    b.t(k) = s.t;
    b.y.row(k) = s.z_t.head(d_y).transpose();
    b.u.row(k) = s.z_t.tail(d_u).transpose();
    b.target_u.row(k) = s.target_v.tail(d_u).transpose();
  }
  return b;
}

/// Mean over the batch of |v_U(t, y, u) - target_U|^2. The Y block of the
/// target is not part of the loss.
inline double fm_loss(const VectorFieldParams& p, const PathBatch& batch) {
  require(batch.size() >= 1, "fm_loss: empty batch");
  const RowMatrix v = velocity_batch(p, batch.t, batch.y, batch.u);
  return (v - batch.target_u).squaredNorm() / static_cast<double>(batch.size());
}

inline double fm_loss(const VectorFieldParams& p, const std::vector<PathSample>& samples) {
  return fm_loss(p, make_batch(samples, p.d_y));
}

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;  // same layout as theta
};

/// Loss and its exact gradient with respect to theta (reverse mode).
inline LossAndGrad loss_and_grad(const VectorFieldParams& p, const PathBatch& batch) {
  require(batch.size() >= 1, "fm_loss: empty batch");
  require(batch.y.cols() == p.d_y && batch.u.cols() == p.d_u && batch.target_u.cols() == p.d_u,
          "loss_and_grad: dimension mismatch");
  ForwardCache cache;
  forward_cached(p, pack_inputs(batch.t, batch.y, batch.u), cache);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const Matrix resid = cache.output - batch.target_u.transpose();
  LossAndGrad out;
  out.loss = resid.squaredNorm() * inv_b;
  out.grad = Vector::Zero(p.theta.size());

  Matrix delta = (2.0 * inv_b) * resid;
  for (Index l = p.num_layers() - 1; l >= 0; --l) {
    if (!delta.allFinite()) throw NumericError("loss_and_grad: non-finite gradient at layer " + std::to_string(l));
    p.W(out.grad, l).noalias() = delta * cache.inputs[l].transpose();
    p.b(out.grad, l) = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = p.W(l).transpose() * delta;
    const Matrix& z = cache.pre[l - 1];
    delta = back.cwiseProduct(selu_grad_matrix(z));
  }
  if (!std::isfinite(out.loss)) throw NumericError("loss_and_grad: non-finite loss at output layer");
  return out;
}

inline LossAndGrad loss_and_grad(const VectorFieldParams& p, const std::vector<PathSample>& samples) {
  return loss_and_grad(p, make_batch(samples, p.d_y));
}

/// Adam moment estimates.
struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of theta in place.
inline void adam_step(Vector& theta, const Vector& grad, AdamState& state, const AdamConfig& cfg = {}) {
  require(grad.size() == theta.size(), "adam_step: gradient has the wrong length");
  if (state.m.size() != theta.size()) {
    state.m = Vector::Zero(theta.size());
    state.v = Vector::Zero(theta.size());
    state.step = 0;
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  theta.array() -= cfg.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
}

}  // namespace cotfm::flow
