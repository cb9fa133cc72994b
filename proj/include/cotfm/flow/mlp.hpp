#pragma once

#include "cotfm/core.hpp"
#include "cotfm/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace cotfm::flow {

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

inline double selu(double x) { return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }
inline double selu_grad(double x) { return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x); }

/// Elementwise forms for whole activation matrices. Both are branch free so
/// the compiler can vectorize them.
template <typename Derived>
auto selu_expr(const Eigen::ArrayBase<Derived>& a) {
  return kSeluLambda * a.max(0.0) + (kSeluLambda * kSeluAlpha) * (a.min(0.0).exp() - 1.0);
}

inline Matrix selu_matrix(const Matrix& z) { return selu_expr(z.array()).matrix(); }

inline Matrix selu_grad_matrix(const Matrix& z) {
  Matrix g = z.array().min(0.0).exp().matrix();
  const double* __restrict x = z.data();
  double* __restrict o = g.data();
  const Index n = g.size();
  for (Index i = 0; i < n; ++i) {
    const double pos = static_cast<double>(x[i] > 0.0);
    o[i] = pos * kSeluLambda + (1.0 - pos) * (kSeluLambda * kSeluAlpha) * o[i];
  }
  return g;
}

/// Weights of the triangular velocity model v(t, y, u).
///
/// A fully connected SELU network maps concat(t, y, u) to a d_u-dimensional
/// U-velocity. The Y-velocity is structurally zero. All weights live in one
/// flat vector `theta`; layer l stores W_l (out x in, column-major) followed
/// by b_l.
struct VectorFieldParams {
  Index d_y = 0;
  Index d_u = 0;
  std::vector<Index> sizes;  // input, hidden..., output
  Vector theta;

  Index num_layers() const { return static_cast<Index>(sizes.size()) - 1; }
  Index input_dim() const { return 1 + d_y + d_u; }

  Index weight_offset(Index l) const {
    Index off = 0;
    for (Index k = 0; k < l; ++k) off += sizes[k + 1] * (sizes[k] + 1);
    return off;
  }
  Index bias_offset(Index l) const { return weight_offset(l) + sizes[l + 1] * sizes[l]; }

  static Index count(const std::vector<Index>& sizes) {
    Index n = 0;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) n += sizes[k + 1] * (sizes[k] + 1);
    return n;
  }

  // Views into an arbitrary vector laid out like theta (used for gradients too).
  Eigen::Map<Matrix> W(Vector& v, Index l) const { return {v.data() + weight_offset(l), sizes[l + 1], sizes[l]}; }
  Eigen::Map<const Matrix> W(const Vector& v, Index l) const {
    return {v.data() + weight_offset(l), sizes[l + 1], sizes[l]};
  }
  Eigen::Map<Vector> b(Vector& v, Index l) const { return {v.data() + bias_offset(l), sizes[l + 1]}; }
  Eigen::Map<const Vector> b(const Vector& v, Index l) const { return {v.data() + bias_offset(l), sizes[l + 1]}; }

  Eigen::Map<const Matrix> W(Index l) const { return W(theta, l); }
  Eigen::Map<const Vector> b(Index l) const { return b(theta, l); }

  void validate() const {
    require(d_y >= 1 && d_u >= 1, "VectorFieldParams: need d_y >= 1 and d_u >= 1");
    require(sizes.size() >= 2, "VectorFieldParams: need at least one layer");
    require(sizes.front() == input_dim(), "VectorFieldParams: input width must be 1 + d_y + d_u");
    require(sizes.back() == d_u, "VectorFieldParams: output width must be d_u");
    for (Index s : sizes) require(s >= 1, "VectorFieldParams: layer widths must be positive");
    require(theta.size() == count(sizes), "VectorFieldParams: theta has the wrong length");
    require(theta.allFinite(), "VectorFieldParams: non-finite weights");
  }
};

inline std::vector<Index> layer_sizes(Index d_y, Index d_u, Index width, Index depth) {
  require(width >= 1 && depth >= 1, "layer_sizes: width and depth must be >= 1");
  std::vector<Index> s{1 + d_y + d_u};
  for (Index k = 0; k < depth; ++k) s.push_back(width);
  s.push_back(d_u);
  return s;
}

/// Truncated-normal (|z| <= 2) weights scaled by 1/sqrt(fan_in), zero
/// biases. With `zero_final` the output layer starts at exactly zero.
inline VectorFieldParams init_params(Index d_y, Index d_u, Index width, Index depth, std::uint64_t seed,
                                     bool zero_final = true) {
  VectorFieldParams p;
  p.d_y = d_y;
  p.d_u = d_u;
  p.sizes = layer_sizes(d_y, d_u, width, depth);
  p.theta = Vector::Zero(VectorFieldParams::count(p.sizes));
  Rng rng = make_rng(seed, 0x1417ULL);
  for (Index l = 0; l < p.num_layers(); ++l) {
    if (zero_final && l == p.num_layers() - 1) break;
    auto w = p.W(p.theta, l);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.sizes[l]));
    for (Index c = 0; c < w.cols(); ++c)
      for (Index r = 0; r < w.rows(); ++r) {
        double z;
        do z = standard_normal(rng);
        while (std::abs(z) > 2.0);
        w(r, c) = scale * z;
      }
  }
  p.validate();
  return p;
}

/// Intermediate values of a batched forward pass; columns are samples.
struct ForwardCache {
  std::vector<Matrix> inputs;  // input to layer l
  std::vector<Matrix> pre;     // pre-activation of layer l
  Matrix output;               // d_u x batch
};

/// Packs (t, y, u) columns for a batch given row-major Y (B x d_y) and U (B x d_u).
inline Matrix pack_inputs(const Vector& t, const RowMatrix& y, const RowMatrix& u) {
  const Index bsz = t.size();
  require(y.rows() == bsz && u.rows() == bsz, "pack_inputs: batch sizes differ");
  Matrix x(1 + y.cols() + u.cols(), bsz);
  x.row(0) = t.transpose();
  x.middleRows(1, y.cols()) = y.transpose();
  x.bottomRows(u.cols()) = u.transpose();
  return x;
}

inline void forward_cached(const VectorFieldParams& p, const Matrix& x, ForwardCache& cache) {
  require(x.rows() == p.input_dim(), "forward: input has wrong dimension");
  const Index layers = p.num_layers();
  cache.inputs.resize(layers);
  cache.pre.resize(layers);
  Matrix h = x;
  for (Index l = 0; l < layers; ++l) {
    cache.inputs[l] = std::move(h);
    cache.pre[l].noalias() = p.W(l) * cache.inputs[l];
    cache.pre[l].colwise() += p.b(l);
    if (l + 1 < layers) {
      h = selu_matrix(cache.pre[l]);
    }
  }
  cache.output = cache.pre[layers - 1];
}

/// U-velocities for a batch, returned as rows (B x d_u).
inline RowMatrix velocity_batch(const VectorFieldParams& p, const Vector& t, const RowMatrix& y, const RowMatrix& u) {
  require(y.cols() == p.d_y && u.cols() == p.d_u, "velocity_batch: dimension mismatch");
  const Matrix x = pack_inputs(t, y, u);
  Matrix h, z;
  for (Index l = 0; l < p.num_layers(); ++l) {
    z.noalias() = p.W(l) * (l == 0 ? x : h);
    z.colwise() += p.b(l);
    if (l + 1 < p.num_layers()) {
      h = selu_expr(z.array()).matrix();
    }
  }
  return z.transpose();
}

inline RowMatrix velocity_batch(const VectorFieldParams& p, double t, const RowMatrix& y, const RowMatrix& u) {
  return velocity_batch(p, Vector::Constant(y.rows(), t), y, u);
}

/// Full velocity in Y x U for one point: the Y block is exactly zero.
inline Vector forward(const VectorFieldParams& p, double t, const Vector& y, const Vector& u) {
  require(y.size() == p.d_y && u.size() == p.d_u, "forward: dimension mismatch");
  Vector v = Vector::Zero(p.d_y + p.d_u);
  const RowMatrix out = velocity_batch(p, Vector::Constant(1, t), RowMatrix(y.transpose()), RowMatrix(u.transpose()));
  v.tail(p.d_u) = out.row(0).transpose();
  return v;
}

}  // namespace cotfm::flow
