#pragma once

#include "cotfm/flow/loss.hpp"
#include "cotfm/flow/mlp.hpp"
#include "cotfm/flow/standardize.hpp"
#include "cotfm/ot/coupling.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cotfm::flow {

enum class CouplingKind { cot_exact, cot_sinkhorn, independent };

inline std::string to_string(CouplingKind k) {
  switch (k) {
    case CouplingKind::cot_exact: return "cot_exact";
    case CouplingKind::cot_sinkhorn: return "cot_sinkhorn";
    case CouplingKind::independent: return "independent";
  }
  return "?";
}

inline CouplingKind coupling_from_string(const std::string& s) {
  if (s == "cot_exact") return CouplingKind::cot_exact;
  if (s == "cot_sinkhorn") return CouplingKind::cot_sinkhorn;
  if (s == "independent") return CouplingKind::independent;
  throw InvalidArgument("unknown coupling '" + s + "' (expected cot_exact, cot_sinkhorn or independent)");
}

struct TrainConfig {
  double sigma = 1e-2;
  double epsilon = 1e-2;
  Index batch_size = 512;
  long steps = 10000;
  double learning_rate = 3e-4;
  std::uint64_t seed = 0;
  Index width = 256;
  Index depth = 4;
  CouplingKind coupling = CouplingKind::cot_exact;
  double sinkhorn_reg = 1e-3;
  int sinkhorn_max_iter = 2000;
  // Datasets up to this size get one plan over the whole training set.
  Index full_plan_threshold = 4096;

  void validate() const {
    require(sigma >= 0.0 && std::isfinite(sigma), "TrainConfig: sigma must be >= 0");
    require(epsilon > 0.0 && std::isfinite(epsilon), "TrainConfig: epsilon must be > 0");
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    require(steps >= 1, "TrainConfig: steps must be >= 1");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "TrainConfig: learning_rate must be > 0");
    require(width >= 1 && depth >= 1, "TrainConfig: width and depth must be >= 1");
    require(sinkhorn_reg > 0.0 && sinkhorn_max_iter >= 1, "TrainConfig: invalid Sinkhorn settings");
    require(full_plan_threshold >= 0, "TrainConfig: full_plan_threshold must be >= 0");
  }

  ot::SolverMethod solver() const {
    return coupling == CouplingKind::cot_sinkhorn ? ot::SolverMethod::sinkhorn(sinkhorn_reg, sinkhorn_max_iter, 1e-6)
                                                   : ot::SolverMethod::exact();
  }

  nlohmann::json to_json() const {
    return {{"sigma", sigma},
            {"epsilon", epsilon},
            {"batch_size", batch_size},
            {"steps", steps},
            {"learning_rate", learning_rate},
            {"seed", seed},
            {"width", width},
            {"depth", depth},
            {"coupling", to_string(coupling)},
            {"sinkhorn_reg", sinkhorn_reg},
            {"sinkhorn_max_iter", sinkhorn_max_iter},
            {"full_plan_threshold", full_plan_threshold}};
  }

  /// Reads the keys present in `j` over the defaults; unknown keys are errors.
  static TrainConfig from_json(const nlohmann::json& j) {
    require(j.is_object(), "train config: expected an object");
    TrainConfig c;
    try {
      for (const auto& [key, val] : j.items()) {
        if (key == "sigma") c.sigma = val.get<double>();
        else if (key == "epsilon") c.epsilon = val.get<double>();
        else if (key == "batch_size") c.batch_size = val.get<Index>();
        else if (key == "steps") c.steps = val.get<long>();
        else if (key == "learning_rate") c.learning_rate = val.get<double>();
        else if (key == "seed") c.seed = val.get<std::uint64_t>();
        else if (key == "width") c.width = val.get<Index>();
        else if (key == "depth") c.depth = val.get<Index>();
        else if (key == "coupling") c.coupling = coupling_from_string(val.get<std::string>());
        else if (key == "sinkhorn_reg") c.sinkhorn_reg = val.get<double>();
        else if (key == "sinkhorn_max_iter") c.sinkhorn_max_iter = val.get<int>();
        else if (key == "full_plan_threshold") c.full_plan_threshold = val.get<Index>();
        else throw InvalidArgument("train config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

/// Draws n joint points, rows laid out as (y, u).
using Sampler = std::function<RowMatrix(Index n, Rng& rng)>;

struct TrainResult {
  VectorFieldParams params;
  std::vector<double> loss;
  Standardizer standardizer;
};

namespace detail {

inline std::vector<ot::IndexPair> pair_batch(const RowMatrix& x0, const RowMatrix& x1, Index d_y,
                                             const TrainConfig& cfg, Rng& rng) {
  const Index n = x0.rows();
  if (cfg.coupling == CouplingKind::independent) {
    std::vector<ot::IndexPair> pairs;
    for (Index k = 0; k < n; ++k) pairs.emplace_back(k, k);
    return pairs;
  }
  const auto plan = ot::cot_coupling(ot::DiscreteMeasure::uniform(x0, d_y), ot::DiscreteMeasure::uniform(x1, d_y),
                                     cfg.epsilon, cfg.solver());
  return ot::sample_pairs(plan, n, rng);
}

inline PathBatch path_batch(const RowMatrix& x0, const RowMatrix& x1, const std::vector<ot::IndexPair>& pairs,
                            Index d_y, double sigma, Rng& rng) {
  const Index bsz = static_cast<Index>(pairs.size()), d = x0.cols(), d_u = d - d_y;
  PathBatch b{Vector(bsz), RowMatrix(bsz, d_y), RowMatrix(bsz, d_u), RowMatrix(bsz, d_u)};
  for (Index k = 0; k < bsz; ++k) {
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    const double t = uniform01(rng);
    const PathSample s = sample_path_point(x0.row(i).transpose(), x1.row(j).transpose(), t, sigma, rng);
    b.t(k) = t;
    b.y.row(k) = s.z_t.head(d_y).transpose();
    b.u.row(k) = s.z_t.tail(d_u).transpose();
    b.target_u.row(k) = s.target_v.tail(d_u).transpose();
  }
  return b;
}

// Shared optimisation loop; `next_batch` produces the path batch for a step.
inline TrainResult optimise(Index d_y, Index d_u, const TrainConfig& cfg,
                            const std::function<PathBatch(Rng&)>& next_batch,
                            const std::function<void(long, double)>& on_step) {
  TrainResult out;
  out.params = init_params(d_y, d_u, cfg.width, cfg.depth, cfg.seed);
  out.loss.reserve(static_cast<std::size_t>(cfg.steps));
  Rng rng = make_rng(cfg.seed, 0x7a11ULL);
  AdamState adam;
  const AdamConfig acfg{cfg.learning_rate};
  for (long step = 0; step < cfg.steps; ++step) {
    const PathBatch batch = next_batch(rng);
    LossAndGrad lg;
    try {
      lg = loss_and_grad(out.params, batch);
    } catch (const NumericError& e) {
      throw NumericError("train: step " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(lg.loss)) throw NumericError("train: non-finite loss at step " + std::to_string(step));
    out.loss.push_back(lg.loss);
    adam_step(out.params.theta, lg.grad, adam, acfg);
    if (on_step) on_step(step, lg.loss);
  }
  return out;
}

}  // namespace detail

/// Flow matching between two samplers. Each step draws a source and a target
/// minibatch, couples them (COT plan or independent pairing), places the
/// pairs on the noisy straight path and takes one Adam step on the U-block
/// loss. Coordinates are used as given (identity standardizer).
inline TrainResult train(const Sampler& source, const Sampler& target, Index d_y, Index d_u, const TrainConfig& cfg,
                         const std::function<void(long, double)>& on_step = {}) {
  cfg.validate();
  require(d_y >= 1 && d_u >= 1, "train: need d_y >= 1 and d_u >= 1");
  auto next = [&](Rng& rng) {
    const RowMatrix x0 = source(cfg.batch_size, rng);
    const RowMatrix x1 = target(cfg.batch_size, rng);
    require(x0.rows() == cfg.batch_size && x1.rows() == cfg.batch_size, "train: sampler returned wrong batch size");
    require(x0.cols() == d_y + d_u && x1.cols() == d_y + d_u, "train: sampler returned wrong dimension");
    const auto pairs = detail::pair_batch(x0, x1, d_y, cfg, rng);
    return detail::path_batch(x0, x1, pairs, d_y, cfg.sigma, rng);
  };
  TrainResult r = detail::optimise(d_y, d_u, cfg, next, on_step);
  r.standardizer = Standardizer::identity(d_y + d_u);
  return r;
}

/// Draws n rows of `data` uniformly with replacement.
inline RowMatrix resample_rows(const RowMatrix& data, Index n, Rng& rng) {
  RowMatrix out(n, data.cols());
  for (Index k = 0; k < n; ++k) out.row(k) = data.row(uniform_index(rng, data.rows()));
  return out;
}

/// Product source in model coordinates: y from the target's Y-marginal
/// (fresh draws from the data), u ~ N(0, I).
inline RowMatrix product_source(const RowMatrix& data, Index d_y, Index n, Rng& rng) {
  RowMatrix out(n, data.cols());
  for (Index k = 0; k < n; ++k) {
    out.row(k).head(d_y) = data.row(uniform_index(rng, data.rows())).head(d_y);
    for (Index c = d_y; c < data.cols(); ++c) out(k, c) = standard_normal(rng);
  }
  return out;
}

/// Trains on a joint training set (rows (y, u)). The data is standardized per
/// coordinate first; the source is the product of the standardized Y-marginal
/// and N(0, I). Sets up to `full_plan_threshold` rows are coupled once with a
/// fixed source draw and minibatch pairs are sampled from that plan; larger
/// sets are coupled per minibatch.
inline TrainResult train_on_data(const RowMatrix& data, Index d_y, const TrainConfig& cfg,
                                 const std::function<void(long, double)>& on_step = {}) {
  cfg.validate();
  const Index d_u = data.cols() - d_y;
  require(d_y >= 1 && d_u >= 1, "train_on_data: invalid coordinate split");
  require(data.rows() >= 2 && data.allFinite(), "train_on_data: need at least two finite rows");
  const Standardizer stdz = Standardizer::fit(data);
  const RowMatrix z = stdz.apply(data);

  TrainResult r;
  const bool full_plan = cfg.coupling != CouplingKind::independent && z.rows() <= cfg.full_plan_threshold;
  if (full_plan) {
    Rng setup = make_rng(cfg.seed, 0x5e7ULL);
    const RowMatrix src = product_source(z, d_y, z.rows(), setup);
    const auto plan = ot::cot_coupling(ot::DiscreteMeasure::uniform(src, d_y), ot::DiscreteMeasure::uniform(z, d_y),
                                       cfg.epsilon, cfg.solver());
    auto next = [&](Rng& rng) {
      const auto pairs = ot::sample_pairs(plan, cfg.batch_size, rng);
      return detail::path_batch(src, z, pairs, d_y, cfg.sigma, rng);
    };
    r = detail::optimise(d_y, d_u, cfg, next, on_step);
  } else {
    auto next = [&](Rng& rng) {
      const RowMatrix x1 = resample_rows(z, cfg.batch_size, rng);
      const RowMatrix x0 = product_source(z, d_y, cfg.batch_size, rng);
      const auto pairs = detail::pair_batch(x0, x1, d_y, cfg, rng);
      return detail::path_batch(x0, x1, pairs, d_y, cfg.sigma, rng);
    };
    r = detail::optimise(d_y, d_u, cfg, next, on_step);
  }
  r.standardizer = stdz;
  return r;
}

}  // namespace cotfm::flow
