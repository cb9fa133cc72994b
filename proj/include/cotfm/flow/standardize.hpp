#pragma once

#include "cotfm/core.hpp"

#include <json.hpp>

namespace cotfm::flow {

/// Per-coordinate affine map x -> (x - mean) / scale over the joint (y, u)
/// layout.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer identity(Index dim) { return {Vector::Zero(dim), Vector::Ones(dim)}; }

  static Standardizer fit(const RowMatrix& data) {
    require(data.rows() >= 2, "Standardizer: need at least two rows");
    Standardizer s;
    s.mean = data.colwise().mean().transpose();
    const RowMatrix c = data.rowwise() - s.mean.transpose();
    s.scale = (c.colwise().squaredNorm() / static_cast<double>(data.rows() - 1)).cwiseSqrt().transpose();
    for (Index k = 0; k < s.scale.size(); ++k)
      if (!(s.scale(k) > 0.0)) s.scale(k) = 1.0;
    return s;
  }

  Index dim() const { return mean.size(); }

  RowMatrix apply(const RowMatrix& x) const {
    require(x.cols() == dim(), "Standardizer: dimension mismatch");
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  }
  RowMatrix invert(const RowMatrix& x) const {
    require(x.cols() == dim(), "Standardizer: dimension mismatch");
    return (x.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
  }

  /// Block versions, for the leading `d_y` (Y) or trailing (U) coordinates.
  RowMatrix apply_y(const RowMatrix& y) const {
    const Index d = y.cols();
    return (y.rowwise() - mean.head(d).transpose()).array().rowwise() / scale.head(d).transpose().array();
  }
  RowMatrix invert_u(const RowMatrix& u) const {
    const Index d = u.cols();
    return (u.array().rowwise() * scale.tail(d).transpose().array()).matrix().rowwise() + mean.tail(d).transpose();
  }

  nlohmann::json to_json() const {
    return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
            {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())}};
  }
  static Standardizer from_json(const nlohmann::json& j) {
    const auto m = j.at("mean").get<std::vector<double>>();
    const auto s = j.at("scale").get<std::vector<double>>();
    require(m.size() == s.size(), "Standardizer: mean and scale lengths differ");
    Standardizer out{Eigen::Map<const Vector>(m.data(), static_cast<Index>(m.size())),
                     Eigen::Map<const Vector>(s.data(), static_cast<Index>(s.size()))};
    require((out.scale.array() > 0.0).all(), "Standardizer: scale must be positive");
    return out;
  }
};

}  // namespace cotfm::flow
