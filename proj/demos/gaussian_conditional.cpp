// Closed-form vs empirical conditional W2 between two bivariate Gaussians
// that share the y marginal, plus a short COT-FM fit of the correlated one.

#include "cotfm/cw/empirical.hpp"
#include "cotfm/cw/gaussian.hpp"
#include "cotfm/flow/train.hpp"
#include "cotfm/ode/sampler.hpp"
#include "cotfm/runtime.hpp"

#include <cstdio>

using namespace cotfm;

int main() {
  tune_allocator();
  const double rho = 0.8;
  const cw::GaussianJoint eta = cw::GaussianJoint::correlated_pair(0.0);
  const cw::GaussianJoint nu = cw::GaussianJoint::correlated_pair(rho);
  std::printf("closed-form CW2^2(rho=0, rho=%.1f) = %.4f\n", rho, cw::gaussian_cw2_squared(eta, nu));

  Rng rng = make_rng(1);
  for (Index n : {250, 1000}) {
    const RowMatrix a = cw::sample_gaussian(eta, n, rng), b = cw::sample_gaussian(nu, n, rng);
    const auto est = cw::empirical_cw(ot::DiscreteMeasure::uniform(a, 1), ot::DiscreteMeasure::uniform(b, 1), 2, 1e-2);
    std::printf("empirical estimate, n = %4ld: %.4f\n", static_cast<long>(n), est.u_cost);
  }

  // Learn u | y for the correlated joint and compare conditional means with rho * y.
  const RowMatrix train = cw::sample_gaussian(nu, 2000, rng);
  flow::TrainConfig cfg;
  cfg.steps = 1500;
  cfg.width = 64;
  cfg.depth = 3;
  cfg.batch_size = 256;
  cfg.learning_rate = 1e-3;
  const flow::TrainResult fit = flow::train_on_data(train, 1, cfg);
  const flow::Checkpoint ck{fit.params, fit.standardizer, cfg};
  std::printf("\n   y   E[u|y] model   rho*y   sd model   sd exact\n");
  for (double y : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
    const RowMatrix u = ode::sample_conditional(ck, Vector::Constant(1, y), 2000, ode::IntegratorConfig{}, rng);
    const double m = u.mean();
    const double sd = std::sqrt((u.array() - m).square().sum() / (u.rows() - 1));
    std::printf("%5.1f   %12.3f   %5.2f   %8.3f   %8.3f\n", y, m, rho * y, sd, std::sqrt(1 - rho * rho));
  }
  return 0;
}
