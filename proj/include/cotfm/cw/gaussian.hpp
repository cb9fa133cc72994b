#pragma once

#include "cotfm/core.hpp"

#include <Eigen/Eigenvalues>
#include <random>
#include <string>

#include <json.hpp>

namespace cotfm::cw {

/// Joint Gaussian on Y x U given by block mean and block covariance.
struct GaussianJoint {
  Vector m_y;
  Vector m_u;
  Matrix S_yy;
  Matrix S_yu;
  Matrix S_uy;
  Matrix S_uu;

  Index d_y() const { return m_y.size(); }
  Index d_u() const { return m_u.size(); }

  Matrix covariance() const {
    const Index dy = d_y(), du = d_u();
    Matrix c(dy + du, dy + du);
    c.topLeftCorner(dy, dy) = S_yy;
    c.topRightCorner(dy, du) = S_yu;
    c.bottomLeftCorner(du, dy) = S_uy;
    c.bottomRightCorner(du, du) = S_uu;
    return c;
  }

  Vector mean() const {
    Vector m(d_y() + d_u());
    m << m_y, m_u;
    return m;
  }

  void validate() const {
    const Index dy = d_y(), du = d_u();
    require(dy >= 1 && du >= 1, "GaussianJoint: need d_y >= 1 and d_u >= 1");
    require(S_yy.rows() == dy && S_yy.cols() == dy, "GaussianJoint: Sigma_yy has wrong shape");
    require(S_yu.rows() == dy && S_yu.cols() == du, "GaussianJoint: Sigma_yu has wrong shape");
    require(S_uy.rows() == du && S_uy.cols() == dy, "GaussianJoint: Sigma_uy has wrong shape");
    require(S_uu.rows() == du && S_uu.cols() == du, "GaussianJoint: Sigma_uu has wrong shape");
    const Matrix c = covariance();
    require(c.allFinite() && m_y.allFinite() && m_u.allFinite(), "GaussianJoint: non-finite entries");
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    require((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
            "GaussianJoint: covariance is not symmetric (Sigma_uy must equal Sigma_yu^T)");
    Eigen::LLT<Matrix> llt(c);
    require(llt.info() == Eigen::Success, "GaussianJoint: covariance is not positive definite");
  }

  /// Standard bivariate case N(0, [[1, rho], [rho, 1]]) with Y = U = R.
  static GaussianJoint correlated_pair(double rho) {
    GaussianJoint g;
    g.m_y = Vector::Zero(1);
    g.m_u = Vector::Zero(1);
    g.S_yy = Matrix::Identity(1, 1);
    g.S_uu = Matrix::Identity(1, 1);
    g.S_yu = Matrix::Constant(1, 1, rho);
    g.S_uy = Matrix::Constant(1, 1, rho);
    return g;
  }
};

/// Symmetric PSD square root via eigendecomposition; eigenvalues are floored
/// at `floor` before taking roots.
inline Matrix sqrtm_psd(const Matrix& a, double floor = 1e-12) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("sqrtm_psd: eigendecomposition failed");
  const Vector root = es.eigenvalues().cwiseMax(floor).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// Tr(A + B - 2 (A^{1/2} B A^{1/2})^{1/2}), the covariance part of the Bures
/// (Gaussian W2) distance.
inline double bures_trace_term(const Matrix& a, const Matrix& b) {
  const Matrix ra = sqrtm_psd(a);
  const Matrix cross = sqrtm_psd(ra * b * ra);
  return (a + b - 2.0 * cross).trace();
}

/// Unconditional W2^2 between N(m1, S1) and N(m2, S2).
inline double gaussian_w2_squared(const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2) {
  require(m1.size() == m2.size() && s1.rows() == s2.rows(), "gaussian_w2_squared: dimension mismatch");
  return (m1 - m2).squaredNorm() + bures_trace_term(s1, s2);
}

/// Conditional W2^2 between two joint Gaussians with a common Y-marginal:
///   |m_u^eta - m_u^nu|^2 + Tr(Q^eta + Q^nu - 2((Q^eta)^1/2 Q^nu (Q^eta)^1/2)^1/2 + R S_yy R^T)
/// where Q = S_uu - S_uy S_yy^{-1} S_yu is the conditional covariance and
/// R = (S_uy^eta - S_uy^nu) S_yy^{-1} is the gap in conditional-mean slopes.
inline double gaussian_cw2_squared(const GaussianJoint& eta, const GaussianJoint& nu) {
  eta.validate();
  nu.validate();
  require(eta.d_y() == nu.d_y() && eta.d_u() == nu.d_u(), "gaussian_cw2_squared: dimension mismatch");
  require((eta.m_y - nu.m_y).cwiseAbs().maxCoeff() <= 1e-10 &&
              (eta.S_yy - nu.S_yy).cwiseAbs().maxCoeff() <= 1e-10,
          "gaussian_cw2_squared: Y-marginals differ");
  const Eigen::LLT<Matrix> syy(eta.S_yy);
  const Matrix q_eta = eta.S_uu - eta.S_uy * syy.solve(eta.S_yu);
  const Matrix q_nu = nu.S_uu - nu.S_uy * syy.solve(nu.S_yu);
  // R = D S^{-1}  =>  R S R^T = D S^{-1} D^T.
  const Matrix d = eta.S_uy - nu.S_uy;
  const Matrix r_s_rt = d * syy.solve(d.transpose());
  return (eta.m_u - nu.m_u).squaredNorm() + bures_trace_term(q_eta, q_nu) + r_s_rt.trace();
}

/// Draws n joint samples laid out as rows (y, u).
template <typename RngT>
RowMatrix sample_gaussian(const GaussianJoint& g, Index n, RngT& rng) {
  g.validate();
  const Matrix l = Eigen::LLT<Matrix>(g.covariance()).matrixL();
  const Index d = g.d_y() + g.d_u();
  Matrix z(d, n);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < d; ++k) z(k, j) = dist(rng);
  const Matrix x = (l * z).colwise() + g.mean();
  return x.transpose();
}

namespace detail {
inline Matrix json_matrix(const nlohmann::json& j, const std::string& name) {
  require(j.is_array() && !j.empty() && j[0].is_array(), "gaussian json: " + name + " must be a 2D array");
  const Index r = static_cast<Index>(j.size()), c = static_cast<Index>(j[0].size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    require(static_cast<Index>(j[i].size()) == c, "gaussian json: ragged rows in " + name);
    for (Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}
inline Vector json_vector(const nlohmann::json& j, const std::string& name) {
  require(j.is_array() && !j.empty(), "gaussian json: " + name + " must be a 1D array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}
}  // namespace detail

/// Parses {"m_y", "m_u", "Sigma_yy", "Sigma_yu", ["Sigma_uy"], "Sigma_uu"}.
/// Sigma_uy defaults to Sigma_yu^T.
inline GaussianJoint gaussian_from_json(const nlohmann::json& j) {
  require(j.is_object(), "gaussian json: expected an object");
  for (const char* key : {"m_y", "m_u", "Sigma_yy", "Sigma_yu", "Sigma_uu"})
    require(j.contains(key), std::string("gaussian json: missing key ") + key);
  GaussianJoint g;
  g.m_y = detail::json_vector(j["m_y"], "m_y");
  g.m_u = detail::json_vector(j["m_u"], "m_u");
  g.S_yy = detail::json_matrix(j["Sigma_yy"], "Sigma_yy");
  g.S_yu = detail::json_matrix(j["Sigma_yu"], "Sigma_yu");
  g.S_uu = detail::json_matrix(j["Sigma_uu"], "Sigma_uu");
  g.S_uy = j.contains("Sigma_uy") ? detail::json_matrix(j["Sigma_uy"], "Sigma_uy") : Matrix(g.S_yu.transpose());
  g.validate();
  return g;
}

inline nlohmann::json gaussian_to_json(const GaussianJoint& g) {
  auto mat = [](const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      nlohmann::json r = nlohmann::json::array();
      for (Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
      rows.push_back(r);
    }
    return rows;
  };
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"m_y", vec(g.m_y)},       {"m_u", vec(g.m_u)},       {"Sigma_yy", mat(g.S_yy)},
          {"Sigma_yu", mat(g.S_yu)}, {"Sigma_uy", mat(g.S_uy)}, {"Sigma_uu", mat(g.S_uu)}};
}

/// A problem file holds {"eta": {...}, "nu": {...}}.
struct GaussianProblem {
  GaussianJoint eta;
  GaussianJoint nu;
};

inline GaussianProblem gaussian_problem_from_json(const nlohmann::json& j) {
  require(j.contains("eta") && j.contains("nu"), "gaussian problem json: expected keys eta and nu");
  return {gaussian_from_json(j["eta"]), gaussian_from_json(j["nu"])};
}

}  // namespace cotfm::cw
