#pragma once

#include "cotfm/bench/summary.hpp"
#include "cotfm/data/lv.hpp"
#include "cotfm/flow/checkpoint.hpp"
#include "cotfm/flow/train.hpp"
#include "cotfm/mcmc/de_mc.hpp"
#include "cotfm/mcmc/lv_posterior.hpp"
#include "cotfm/metrics/mmd.hpp"
#include "cotfm/metrics/wasserstein.hpp"
#include "cotfm/ode/sampler.hpp"

#include <functional>
#include <ostream>
#include <string>

#include <json.hpp>

namespace cotfm::bench {

inline mcmc::DeMcConfig default_lv_mcmc() {
  mcmc::DeMcConfig c;
  c.n_chains = 24;
  c.n_steps = 15000;
  c.burn_in = 5000;
  return c;
}

struct LvBenchConfig {
  Index n_train = 10000;
  Index n_samples = 1000;
  std::uint64_t seed = 0;
  flow::TrainConfig train;
  ode::IntegratorConfig integrator;
  mcmc::DeMcConfig mcmc = default_lv_mcmc();

  void validate() const {
    require(n_train >= 2, "benchmark lv: n_train must be >= 2");
    require(n_samples >= 2, "benchmark lv: n_samples must be >= 2");
    train.validate();
    integrator.validate();
    mcmc.validate(4);
    const Index kept = mcmc.n_chains * ((mcmc.n_steps - mcmc.burn_in + mcmc.thin - 1) / mcmc.thin);
    require(kept >= n_samples, "benchmark lv: MCMC keeps fewer draws than n_samples");
  }

  nlohmann::json to_json() const {
    return {{"n_train", n_train},         {"n_samples", n_samples},
            {"seed", seed},               {"train", train.to_json()},
            {"integrator", integrator.to_json()}, {"mcmc", mcmc.to_json(4)}};
  }

  static LvBenchConfig from_json(const nlohmann::json& j) {
    LvBenchConfig c;
    try {
      for (const auto& [k, v] : j.items()) {
        if (k == "n_train") c.n_train = v.get<Index>();
        else if (k == "n_samples") c.n_samples = v.get<Index>();
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else if (k == "train") c.train = flow::TrainConfig::from_json(v);
        else if (k == "integrator") c.integrator = ode::IntegratorConfig::from_json(v);
        else if (k == "mcmc") {
          for (const auto& [mk, mv] : v.items()) {
            if (mk == "n_chains") c.mcmc.n_chains = mv.get<Index>();
            else if (mk == "gamma_scale") c.mcmc.gamma_scale = mv.get<double>();
            else if (mk == "jitter_sd") c.mcmc.jitter_sd = mv.get<double>();
            else if (mk == "n_steps") c.mcmc.n_steps = mv.get<Index>();
            else if (mk == "burn_in") c.mcmc.burn_in = mv.get<Index>();
            else if (mk == "thin") c.mcmc.thin = mv.get<Index>();
            else if (mk == "full_jump_every") c.mcmc.full_jump_every = mv.get<Index>();
            else if (mk == "seed") c.mcmc.seed = mv.get<std::uint64_t>();
            else throw InvalidArgument("benchmark lv config: unknown mcmc key '" + mk + "'");
          }
        } else {
          throw InvalidArgument("benchmark lv config: unknown key '" + k + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("benchmark lv config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

/// Mean squared difference between log z(u) and log y_obs over the 22
/// observations. +inf when the simulation does not stay finite.
inline double log_trajectory_mse(const Vector& log_u, const Vector& y_obs) {
  const data::LvTrajectory traj = data::lv_simulate(data::LvParams::from_log(log_u));
  if (!traj.z.allFinite()) return kInf;
  return (traj.z.array().log() - y_obs.array().log()).square().mean();
}

inline std::vector<double> log_trajectory_mse(const RowMatrix& log_u, const Vector& y_obs) {
  std::vector<double> out;
  for (Index k = 0; k < log_u.rows(); ++k) out.push_back(log_trajectory_mse(Vector(log_u.row(k).transpose()), y_obs));
  return out;
}

/// n_chains distinct prior draws with finite log posterior.
inline RowMatrix lv_mcmc_init(Index n_chains, const Vector& y_obs, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x1a17ULL);
  RowMatrix init(n_chains, 4);
  for (Index c = 0; c < n_chains; ++c) {
    Vector x;
    do {
      x = data::lv_prior_sample_log(1, rng).row(0).transpose();
    } while (!std::isfinite(mcmc::lv_log_posterior(x, y_obs)));
    init.row(c) = x.transpose();
  }
  return init;
}

struct LvBenchResult {
  Vector y_obs;
  RowMatrix cot, reference, prior;  // log-parameter samples
  double w2_log = 0.0, mmd_log = 0.0;
  std::vector<double> mse_cot, mse_reference, mse_prior;
  double mcmc_acceptance = 0.0;
  Index rejected_draws = 0;
  double final_loss = 0.0;

  double mse_ratio() const { return median_of(mse_prior) / median_of(mse_cot); }

  nlohmann::json to_json() const {
    return {{"w2_log_params", w2_log},
            {"mmd_log_params", mmd_log},
            {"median_mse_cot_fm", median_of(mse_cot)},
            {"median_mse_de_mc", median_of(mse_reference)},
            {"median_mse_prior", median_of(mse_prior)},
            {"median_mse_ratio_prior_over_cot_fm", mse_ratio()},
            {"mcmc_mean_acceptance", mcmc_acceptance},
            {"simulator_rejections", rejected_draws},
            {"final_train_loss", final_loss}};
  }
};

/// End-to-end LV inverse problem: simulate training pairs, train COT-FM on
/// (log y, log u), observe at the benchmark parameters, then compare COT-FM,
/// DE-MC and prior draws in log-parameter space.
inline LvBenchResult run_lv(const LvBenchConfig& cfg, const std::function<void(const std::string&)>& log = {}) {
  cfg.validate();
  LvBenchResult r;
  Rng obs_rng = make_rng(cfg.seed, 0x0b5ULL);
  r.y_obs = data::lv_observe(data::lv_simulate(data::kLvBenchmarkParams).z, obs_rng);

  if (log) log("simulating " + std::to_string(cfg.n_train) + " training pairs");
  const data::LvDataset ds = data::lv_dataset(cfg.n_train, mix64(cfg.seed ^ 0x7a1aULL));
  r.rejected_draws = ds.rejected;

  if (log) log("training COT-FM");
  const flow::TrainResult tr = flow::train_on_data(ds.log_joint(), data::kLvObsDim, cfg.train);
  r.final_loss = tr.loss.empty() ? 0.0 : tr.loss.back();
  const flow::Checkpoint ck{tr.params, tr.standardizer, cfg.train};
  Rng sample_rng = make_rng(cfg.seed, 0x5a3ULL);
  r.cot = ode::sample_conditional(ck, Vector(r.y_obs.array().log().matrix()), cfg.n_samples, cfg.integrator, sample_rng);

  if (log) log("running DE-MC reference chains");
  mcmc::DeMcConfig mc = cfg.mcmc;
  mc.seed = mix64(cfg.seed ^ mc.seed ^ 0xdeULL);
  auto logp = [&](const Vector& x) { return mcmc::lv_log_posterior(x, r.y_obs); };
  const mcmc::DeMcResult chains = mcmc::de_mc_sample(logp, mc, lv_mcmc_init(mc.n_chains, r.y_obs, cfg.seed));
  r.reference = chains.thinned_to(cfg.n_samples);
  r.mcmc_acceptance = chains.mean_acceptance();

  Rng prior_rng = make_rng(cfg.seed, 0x9a1ULL);
  r.prior = data::lv_prior_sample_log(cfg.n_samples, prior_rng);

  r.w2_log = metrics::w2_empirical(r.cot, r.reference, cfg.seed);
  r.mmd_log = metrics::mmd_squared(r.cot, r.reference);
  r.mse_cot = log_trajectory_mse(r.cot, r.y_obs);
  r.mse_reference = log_trajectory_mse(r.reference, r.y_obs);
  r.mse_prior = log_trajectory_mse(r.prior, r.y_obs);
  return r;
}

/// Markdown table: distances of the COT-FM posterior to the DE-MC reference
/// and median posterior-predictive log-trajectory MSE per sampler.
inline void write_lv_table(std::ostream& out, const LvBenchResult& r) {
  char buf[256];
  out << "| Method | W2 to DE-MC | MMD to DE-MC (1e-3) | median log-trajectory MSE |\n|---|---|---|---|\n";
  std::snprintf(buf, sizeof buf, "| COT-FM | %.4f | %.3f | %.4f |\n", r.w2_log, r.mmd_log / 1e-3, median_of(r.mse_cot));
  out << buf;
  std::snprintf(buf, sizeof buf, "| DE-MC | 0 | 0 | %.4f |\n", median_of(r.mse_reference));
  out << buf;
  std::snprintf(buf, sizeof buf, "| Prior | - | - | %.4f |\n", median_of(r.mse_prior));
  out << buf;
}

}  // namespace cotfm::bench
