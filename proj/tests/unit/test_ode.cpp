#include "cotfm/metrics/mmd.hpp"
#include "cotfm/ode/integrate.hpp"
#include "cotfm/ode/sampler.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cotfm;
using namespace cotfm::ode;

namespace {

IntegratorConfig fixed(Method m, int steps) {
  IntegratorConfig c;
  c.method = m;
  c.steps = steps;
  return c;
}

// du/dt = u.
RowMatrix linear_field(double, const RowMatrix& u) { return u; }

double linear_error(Method m, int steps) {
  RowMatrix u0(1, 2);
  u0 << 1.0, -0.5;
  const RowMatrix u1 = integrate(linear_field, u0, fixed(m, steps));
  return (u1 - std::exp(1.0) * u0).norm() / u0.norm();
}

flow::VectorFieldParams constant_field(const Vector& c, Index d_y) {
  flow::VectorFieldParams p = flow::init_params(d_y, c.size(), 8, 2, 1);
  p.b(p.theta, p.num_layers() - 1) = c;
  return p;
}

}  // namespace

TEST(Integrate, ConstantFieldIsExactOnDyadicSteps) {
  Vector c(2);
  c << 0.5, -1.25;
  const auto p = constant_field(c, 1);
  Vector y(1), u0(2);
  y << 0.3;
  u0 << 1.0, 2.0;
  for (Method m : {Method::euler, Method::rk4}) {
    EXPECT_EQ(ode::integrate(p, y, u0, fixed(m, 64)), u0 + c);
    EXPECT_LE((ode::integrate(p, y, u0, fixed(m, 100)) - (u0 + c)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Integrate, Rk4LinearFieldAccuracy) { EXPECT_LT(linear_error(Method::rk4, 100), 1e-8); }

TEST(Integrate, Rk4FourthOrder) {
  for (int n : {5, 10, 20}) {
    const double ratio = linear_error(Method::rk4, n) / linear_error(Method::rk4, 2 * n);
    EXPECT_GE(ratio, 12.0) << n;
    EXPECT_LE(ratio, 20.0) << n;
  }
}

TEST(Integrate, ErrorNonincreasingAsStepsDouble) {
  for (Method m : {Method::euler, Method::rk4}) {
    double prev = kInf;
    for (int n = 2; n <= 128; n *= 2) {
      const double e = linear_error(m, n);
      EXPECT_LE(e, prev) << to_string(m) << " " << n;
      prev = e;
    }
  }
}

TEST(Integrate, EulerFirstOrder) {
  const double ratio = linear_error(Method::euler, 200) / linear_error(Method::euler, 400);
  EXPECT_NEAR(ratio, 2.0, 0.05);
}

TEST(Integrate, DopriMeetsTolerance) {
  IntegratorConfig c;
  c.method = Method::dopri;
  c.rtol = 1e-9;
  c.atol = 1e-12;
  RowMatrix u0(1, 2);
  u0 << 1.0, -0.5;
  const RowMatrix u1 = integrate(linear_field, u0, c);
  EXPECT_LT((u1 - std::exp(1.0) * u0).norm(), 1e-7);
  // Time-dependent field du/dt = cos(t): u(1) = u0 + sin(1).
  auto f = [](double t, const RowMatrix& u) { return RowMatrix(RowMatrix::Constant(u.rows(), u.cols(), std::cos(t))); };
  EXPECT_NEAR(integrate(f, u0, c)(0, 0), 1.0 + std::sin(1.0), 1e-8);
}

TEST(Integrate, TrajectoryRecordsEveryStep) {
  std::vector<RowMatrix> traj;
  RowMatrix u0 = RowMatrix::Ones(3, 1);
  integrate(linear_field, u0, fixed(Method::rk4, 10), &traj);
  ASSERT_EQ(traj.size(), 11u);
  EXPECT_EQ(traj.front(), u0);
  EXPECT_GT(traj.back()(0, 0), 2.7);
}

TEST(Integrate, NonFiniteStateReportsTime) {
  auto f = [](double t, const RowMatrix& u) {
    return RowMatrix(RowMatrix::Constant(u.rows(), u.cols(), t > 0.5 ? std::nan("") : 1.0));
  };
  try {
    integrate(f, RowMatrix::Zero(1, 1), fixed(Method::euler, 10));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("t="), std::string::npos);
  }
}

TEST(Integrate, ConfigValidation) {
  EXPECT_THROW(fixed(Method::rk4, 0).validate(), InvalidArgument);
  EXPECT_THROW(IntegratorConfig::from_json({{"method", "leapfrog"}}), InvalidArgument);
  EXPECT_THROW(IntegratorConfig::from_json({{"rtol", -1.0}}), InvalidArgument);
  const IntegratorConfig d = IntegratorConfig::from_json(nlohmann::json::object());
  EXPECT_EQ(d.method, Method::rk4);
  EXPECT_EQ(d.steps, 100);
}

TEST(Integrate, JointStateKeepsYFixed) {
  // Integrating the full (y, u) velocity leaves y bit-identical.
  const auto p = flow::init_params(2, 2, 16, 2, 3, false);
  Rng rng = make_rng(5);
  for (Method m : {Method::euler, Method::rk4, Method::dopri}) {
    const RowMatrix z0 = normal_matrix(rng, 20, 4);
    auto field = [&](double t, const RowMatrix& z) {
      RowMatrix v(z.rows(), 4);
      for (Index k = 0; k < z.rows(); ++k)
        v.row(k) = flow::forward(p, t, z.row(k).head(2).transpose(), z.row(k).tail(2).transpose()).transpose();
      return v;
    };
    IntegratorConfig c = fixed(m, 50);
    const RowMatrix z1 = integrate(field, z0, c);
    EXPECT_EQ(z1.leftCols(2), z0.leftCols(2)) << to_string(m);
    EXPECT_GT((z1.rightCols(2) - z0.rightCols(2)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SamplePosterior, EmptyRequest) {
  const auto p = flow::init_params(1, 2, 4, 1, 1);
  Rng rng = make_rng(6);
  const RowMatrix s = sample_posterior(p, Vector::Zero(1), 0, standard_normal_u(2), {}, rng);
  EXPECT_EQ(s.rows(), 0);
  EXPECT_EQ(s.cols(), 2);
}

TEST(SamplePosterior, ZeroFieldReturnsSourceDraws) {
  const auto p = flow::init_params(1, 2, 4, 1, 1);
  Rng a = make_rng(7), b = make_rng(7);
  const RowMatrix s = sample_posterior(p, Vector::Ones(1), 2000, standard_normal_u(2), {}, a);
  EXPECT_EQ(s, normal_matrix(b, 2000, 2));

  Rng c = make_rng(8);
  const RowMatrix fresh = normal_matrix(c, 2000, 2);
  metrics::MmdConfig mc;
  mc.estimator = metrics::MmdEstimator::unbiased;
  // Null-distribution scale of the unbiased statistic is O(1/n).
  EXPECT_LT(std::abs(metrics::mmd_squared(s, fresh, mc)), 5.0 / 2000.0);
}

TEST(SamplePosterior, DeterministicUnderSeed) {
  const auto p = flow::init_params(2, 1, 8, 2, 1, false);
  Vector y(2);
  y << 0.2, -0.4;
  Rng a = make_rng(9), b = make_rng(9);
  EXPECT_EQ(sample_posterior(p, y, 50, standard_normal_u(1), {}, a),
            sample_posterior(p, y, 50, standard_normal_u(1), {}, b));
}

TEST(SampleConditional, AppliesStandardization) {
  flow::Checkpoint ck;
  Vector c(1);
  c << 1.0;
  ck.params = constant_field(c, 1);
  ck.standardizer.mean = Vector(2);
  ck.standardizer.mean << 10.0, 3.0;
  ck.standardizer.scale = Vector(2);
  ck.standardizer.scale << 2.0, 0.5;
  Rng a = make_rng(11), b = make_rng(11);
  Vector y(1);
  y << 12.0;
  const RowMatrix s = sample_conditional(ck, y, 100, fixed(Method::rk4, 64), a);
  const RowMatrix u0 = normal_matrix(b, 100, 1);
  // Model coordinates: u1 = u0 + 1; data coordinates: 3 + 0.5 u1.
  EXPECT_LE((s - (3.0 + 0.5 * (u0.array() + 1.0)).matrix()).cwiseAbs().maxCoeff(), 1e-14);
}
