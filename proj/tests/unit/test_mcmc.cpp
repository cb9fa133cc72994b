#include "cotfm/data/lv.hpp"
#include "cotfm/mcmc/de_mc.hpp"
#include "cotfm/mcmc/lv_posterior.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

using namespace cotfm;
using namespace cotfm::mcmc;

namespace {

double std_normal_logpdf(const Vector& x) {
  return -0.5 * x.squaredNorm() - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

RowMatrix gaussian_init(Index chains, Index dim, std::uint64_t seed, double scale = 1.0) {
  Rng rng = make_rng(seed, 5);
  return scale * normal_matrix(rng, chains, dim);
}

}  // namespace

// --------------------------------------------------------- log posterior

TEST(LvPosterior, ZeroResidualLikelihood) {
  const Vector log_u = data::kLvBenchmarkParams.to_vector().array().log().matrix();
  const Vector y = data::lv_simulate(data::kLvBenchmarkParams).z;
  const double expected = 22.0 * std::log(1.0 / std::sqrt(2.0 * std::numbers::pi * 0.1));
  EXPECT_NEAR(lv_log_likelihood(log_u, y), expected, 1e-10);
  EXPECT_NEAR(lv_log_posterior(log_u, y) - lv_log_prior(log_u), expected, 1e-10);
}

TEST(LvPosterior, PriorModeAtMean) {
  const Vector m = data::lv_prior_mean();
  const double at_mean = lv_log_prior(m);
  EXPECT_NEAR(at_mean, -2.0 * std::log(2.0 * std::numbers::pi * 0.5), 1e-12);
  Rng rng = make_rng(11);
  for (int k = 0; k < 50; ++k) {
    Vector dir(4);
    for (Index j = 0; j < 4; ++j) dir(j) = standard_normal(rng);
    EXPECT_LT(lv_log_prior(m + 1e-3 * dir), at_mean);
    EXPECT_LT(lv_log_prior(m - 0.7 * dir), at_mean);
  }
}

TEST(LvPosterior, DecreasesWithResidualMagnitude) {
  const Vector log_u = data::kLvBenchmarkParams.to_vector().array().log().matrix();
  const Vector z = data::lv_simulate(data::kLvBenchmarkParams).z;
  Rng rng = make_rng(4);
  Vector dir(22);
  for (Index j = 0; j < 22; ++j) dir(j) = standard_normal(rng);
  double prev = kInf;
  for (double s : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
    const Vector y = (z.array().log() + s * dir.array()).exp().matrix();
    const double v = lv_log_posterior(log_u, y);
    EXPECT_LT(v, prev) << "s=" << s;
    prev = v;
  }
}

TEST(LvPosterior, BlowUpIsMinusInfinity) {
  const Vector y = data::lv_simulate(data::kLvBenchmarkParams).z;
  Vector log_u(4);
  log_u << 6.0, -3.0, 6.0, 3.0;  // prey collapse drives states to the floor
  EXPECT_EQ(lv_log_posterior(log_u, y), -kInf);
}

TEST(LvPosterior, Errors) {
  EXPECT_THROW(lv_log_posterior(Vector::Zero(3), Vector::Ones(22)), InvalidArgument);
  EXPECT_THROW(lv_log_posterior(Vector::Zero(4), Vector::Ones(21)), InvalidArgument);
  EXPECT_THROW(lv_log_posterior(Vector::Zero(4), -Vector::Ones(22)), InvalidArgument);
  Vector bad = Vector::Zero(4);
  bad(1) = std::nan("");
  EXPECT_THROW(lv_log_posterior(bad, Vector::Ones(22)), InvalidArgument);
}

// ------------------------------------------------------------------ DE-MC

TEST(DeMc, StandardGaussian4D) {
  DeMcConfig cfg;
  cfg.n_chains = 16;
  cfg.n_steps = 20000;
  cfg.burn_in = 2000;
  cfg.seed = 1;
  const DeMcResult res = de_mc_sample(std_normal_logpdf, cfg, gaussian_init(16, 4, 2, 3.0));
  const RowMatrix all = res.pooled();
  for (Index j = 0; j < 4; ++j) {
    double ess = 0.0;
    for (const RowMatrix& c : res.chains) {
      const double e = effective_sample_size(c.col(j));
      EXPECT_GT(e, 0.01 * static_cast<double>(c.rows())) << "per-chain ESS, coordinate " << j;
      ess += e;
    }
    const double mean = all.col(j).mean();
    const double var = (all.col(j).array() - mean).square().sum() / static_cast<double>(all.rows() - 1);
    const double mcse = std::sqrt(var / ess);
    EXPECT_LT(std::abs(mean), 3.0 * mcse) << "coordinate " << j;
    EXPECT_GE(var, 0.85);
    EXPECT_LE(var, 1.15);
  }
}

TEST(DeMc, SharpFarTargetAcceptsLessThanDiffuse) {
  DeMcConfig cfg;
  cfg.n_chains = 12;
  cfg.n_steps = 2000;
  cfg.burn_in = 100;
  cfg.seed = 3;
  const Vector far = Vector::Constant(4, 10.0);
  auto sharp = [&](const Vector& x) { return -0.5 * (x - far).squaredNorm() / 1e-6; };
  const RowMatrix init = gaussian_init(12, 4, 8);
  const double diffuse_rate = de_mc_sample(std_normal_logpdf, cfg, init).mean_acceptance();
  const double sharp_rate = de_mc_sample(sharp, cfg, init).mean_acceptance();
  EXPECT_LT(sharp_rate, diffuse_rate);
  EXPECT_GT(diffuse_rate, 0.05);
}

TEST(DeMc, SameSeedIdenticalChains) {
  DeMcConfig cfg;
  cfg.n_chains = 9;
  cfg.n_steps = 500;
  cfg.burn_in = 100;
  cfg.thin = 3;
  cfg.seed = 42;
  const RowMatrix init = gaussian_init(9, 4, 1);
  const DeMcResult a = de_mc_sample(std_normal_logpdf, cfg, init);
  const DeMcResult b = de_mc_sample(std_normal_logpdf, cfg, init);
  ASSERT_EQ(a.chains.size(), b.chains.size());
  EXPECT_EQ(a.chains[0].rows(), (400 + 2) / 3);
  for (std::size_t c = 0; c < a.chains.size(); ++c) EXPECT_TRUE(a.chains[c] == b.chains[c]);
  EXPECT_TRUE(a.acceptance == b.acceptance);
  cfg.seed = 43;
  EXPECT_FALSE(de_mc_sample(std_normal_logpdf, cfg, init).chains[0] == a.chains[0]);
}

TEST(DeMc, ProposalSymmetryAndDonorUniformity) {
  DeMcConfig cfg;
  cfg.n_chains = 6;
  cfg.n_steps = 6000;
  cfg.burn_in = 0;
  cfg.seed = 9;
  cfg.gamma_scale = 0.7;
  cfg.log_proposals = true;
  const DeMcResult res = de_mc_sample(std_normal_logpdf, cfg, gaussian_init(6, 2, 3));
  ASSERT_EQ(res.proposals.size(), static_cast<std::size_t>(6 * 6000));
  std::map<std::pair<Index, Index>, int> counts;  // chain 0 only
  for (const Proposal& p : res.proposals) {
    ASSERT_NE(p.a, p.b);
    ASSERT_NE(p.a, p.chain);
    ASSERT_NE(p.b, p.chain);
    const double g = (p.generation + 1) % 10 == 0 ? 1.0 : 0.7;
    ASSERT_EQ(p.gamma, g);
    ASSERT_TRUE(p.jump == (p.gamma * (p.x_a - p.x_b)).eval());
    ASSERT_TRUE((p.gamma * (p.x_b - p.x_a)).eval() == (-p.jump).eval());
    if (p.chain == 0) ++counts[{p.a, p.b}];
  }
  // 20 ordered pairs for chain 0; chi-square with 19 dof, 99.9% quantile 43.8.
  ASSERT_EQ(counts.size(), 20u);
  const double expected = 6000.0 / 20.0;
  double chi2 = 0.0;
  for (const auto& [pair, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
  EXPECT_LT(chi2, 43.8);
}

TEST(DeMc, AcceptanceIsPerChainAndCsvStreams) {
  DeMcConfig cfg;
  cfg.n_chains = 9;
  cfg.n_steps = 50;
  cfg.burn_in = 40;
  const DeMcResult res = de_mc_sample(std_normal_logpdf, cfg, gaussian_init(9, 4, 1));
  ASSERT_EQ(res.acceptance.size(), 9);
  EXPECT_TRUE((res.acceptance.array() >= 0.0).all() && (res.acceptance.array() <= 1.0).all());
  std::ostringstream os;
  res.write_csv(os);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "generation,chain,x0,x1,x2,x3");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 10 * 9);
  EXPECT_EQ(res.thinned_to(30).rows(), 30);
}

TEST(DeMc, Errors) {
  DeMcConfig cfg;
  cfg.n_chains = 9;
  const RowMatrix init = gaussian_init(9, 4, 1);
  cfg.burn_in = cfg.n_steps;
  EXPECT_THROW(de_mc_sample(std_normal_logpdf, cfg, init), InvalidArgument);
  cfg.burn_in = 0;
  cfg.n_chains = 8;  // < 2*4 + 1
  EXPECT_THROW(de_mc_sample(std_normal_logpdf, cfg, init.topRows(8)), InvalidArgument);
  cfg.n_chains = 9;
  RowMatrix dup = init;
  dup.row(3) = dup.row(4);
  EXPECT_THROW(de_mc_sample(std_normal_logpdf, cfg, dup), InvalidArgument);
  EXPECT_THROW(de_mc_sample(std_normal_logpdf, cfg, init.topRows(5)), InvalidArgument);
  auto nan_density = [](const Vector&) { return std::nan(""); };
  EXPECT_THROW(de_mc_sample(nan_density, cfg, init), NumericError);
}

TEST(Ess, IidAndCorrelatedSeries) {
  Rng rng = make_rng(2);
  Vector iid(20000), ar(20000);
  double prev = 0.0;
  for (Index k = 0; k < 20000; ++k) {
    iid(k) = standard_normal(rng);
    prev = 0.9 * prev + std::sqrt(1.0 - 0.81) * standard_normal(rng);
    ar(k) = prev;
  }
  EXPECT_NEAR(effective_sample_size(iid) / 20000.0, 1.0, 0.1);
  // AR(1) with phi = 0.9: n (1 - phi) / (1 + phi) = n / 19.
  EXPECT_NEAR(effective_sample_size(ar) / (20000.0 / 19.0), 1.0, 0.25);
}
