#pragma once

#include "cotfm/bench/summary.hpp"
#include "cotfm/data/synthetic.hpp"
#include "cotfm/flow/checkpoint.hpp"
#include "cotfm/flow/train.hpp"
#include "cotfm/metrics/mmd.hpp"
#include "cotfm/metrics/wasserstein.hpp"
#include "cotfm/ode/sampler.hpp"

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace cotfm::bench {

struct Bench2dConfig {
  std::vector<std::string> datasets{"moons"};
  Index n_train = 20000;
  Index n_test = 5000;
  Index n_test_sets = 5;
  std::uint64_t seed = 0;
  bool include_fm = true;  // also train the independent-coupling baseline
  flow::TrainConfig train;
  ode::IntegratorConfig integrator;
  metrics::MmdConfig mmd;

  void validate() const {
    require(!datasets.empty(), "benchmark 2d: need at least one dataset");
    for (const auto& d : datasets) data::Synthetic2DSpec{d, 1, 0}.validate();
    require(n_train >= 2 && n_test >= 2 && n_test_sets >= 1, "benchmark 2d: n_train, n_test >= 2 and n_test_sets >= 1");
    train.validate();
    integrator.validate();
    mmd.validate();
  }

  nlohmann::json to_json() const {
    return {{"datasets", datasets},       {"n_train", n_train}, {"n_test", n_test},
            {"n_test_sets", n_test_sets}, {"seed", seed},       {"include_fm", include_fm},
            {"train", train.to_json()},   {"integrator", integrator.to_json()},
            {"mmd_bandwidth", mmd.bandwidth}};
  }

  static Bench2dConfig from_json(const nlohmann::json& j) {
    Bench2dConfig c;
    try {
      for (const auto& [k, v] : j.items()) {
        if (k == "datasets") c.datasets = v.get<std::vector<std::string>>();
        else if (k == "n_train") c.n_train = v.get<Index>();
        else if (k == "n_test") c.n_test = v.get<Index>();
        else if (k == "n_test_sets") c.n_test_sets = v.get<Index>();
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else if (k == "include_fm") c.include_fm = v.get<bool>();
        else if (k == "train") c.train = flow::TrainConfig::from_json(v);
        else if (k == "integrator") c.integrator = ode::IntegratorConfig::from_json(v);
        else if (k == "mmd_bandwidth") c.mmd.bandwidth = v.get<double>();
        else throw InvalidArgument("benchmark 2d config: unknown key '" + k + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("benchmark 2d config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

struct Bench2dRow {
  std::string dataset, method;
  std::vector<double> w2, mmd;  // one entry per test set
};

inline std::uint64_t dataset_seed(std::uint64_t seed, const std::string& name, std::uint64_t slot) {
  std::uint64_t h = mix64(seed);
  for (char c : name) h = mix64(h ^ static_cast<unsigned char>(c));
  return mix64(h ^ (slot + 1));
}

/// One generated joint per test set: y from the test set, u drawn from the
/// model's conditional at that y. Returns W2 and MMD^2 to the test joint.
inline Bench2dRow evaluate_2d(const flow::Checkpoint& ck, const std::string& dataset, const std::string& method,
                              const Bench2dConfig& cfg) {
  Bench2dRow row{dataset, method, {}, {}};
  for (Index k = 0; k < cfg.n_test_sets; ++k) {
    const std::uint64_t s = dataset_seed(cfg.seed, dataset, 100 + static_cast<std::uint64_t>(k));
    const RowMatrix test = data::sample_2d_points({dataset, cfg.n_test, s});
    Rng rng = make_rng(s, 0xe7a1ULL);
    RowMatrix gen = test;
    gen.col(1) = ode::sample_conditional(ck, RowMatrix(test.col(0)), cfg.integrator, rng).col(0);
    row.w2.push_back(metrics::w2_empirical(gen, test, s));
    row.mmd.push_back(metrics::mmd_squared(gen, test, cfg.mmd));
  }
  return row;
}

/// Trains COT-FM (and optionally the independent-coupling FM baseline) on
/// each dataset and evaluates on `n_test_sets` fresh test sets.
inline std::vector<Bench2dRow> run_2d(const Bench2dConfig& cfg,
                                      const std::function<void(const std::string&)>& log = {}) {
  cfg.validate();
  std::vector<Bench2dRow> rows;
  for (const auto& name : cfg.datasets) {
    const RowMatrix train = data::sample_2d_points({name, cfg.n_train, dataset_seed(cfg.seed, name, 0)});
    std::vector<std::pair<std::string, flow::CouplingKind>> methods{{"COT-FM", cfg.train.coupling}};
    if (cfg.include_fm) methods.emplace_back("FM", flow::CouplingKind::independent);
    for (const auto& [method, coupling] : methods) {
      flow::TrainConfig tc = cfg.train;
      tc.coupling = coupling;
      if (log) log("training " + method + " on " + name);
      const flow::TrainResult tr = flow::train_on_data(train, 1, tc);
      rows.push_back(evaluate_2d({tr.params, tr.standardizer, tc}, name, method, cfg));
      if (log) log(method + " on " + name + ": W2 " + mean_pm_sd(rows.back().w2, 1e-2) + " (1e-2)");
    }
  }
  return rows;
}

/// Per-test-set rows: dataset,method,test_set,w2,mmd.
inline void write_2d_csv(std::ostream& out, const std::vector<Bench2dRow>& rows) {
  out << "dataset,method,test_set,w2,mmd\n";
  out.precision(17);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < r.w2.size(); ++k)
      out << r.dataset << ',' << r.method << ',' << k << ',' << r.w2[k] << ',' << r.mmd[k] << '\n';
}

/// Markdown table, mean ± sd over test sets, W2 in units of 1e-2 and MMD in
/// units of 1e-3.
inline void write_2d_table(std::ostream& out, const std::vector<Bench2dRow>& rows) {
  out << "| Dataset | Method | W2 (1e-2) | MMD (1e-3) |\n|---|---|---|---|\n";
  for (const auto& r : rows)
    out << "| " << r.dataset << " | " << r.method << " | " << mean_pm_sd(r.w2, 1e-2) << " | "
        << mean_pm_sd(r.mmd, 1e-3) << " |\n";
}

}  // namespace cotfm::bench
