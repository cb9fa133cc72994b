#pragma once

#include "cotfm/core.hpp"
#include "cotfm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

namespace cotfm::mcmc {

using LogDensity = std::function<double(const Vector&)>;

struct DeMcConfig {
  Index n_chains = 16;
  std::optional<double> gamma_scale;  // unset: 2.38 / sqrt(2 dim)
  double jitter_sd = 1e-4;
  Index n_steps = 10000;
  Index burn_in = 2000;
  Index thin = 1;
  Index full_jump_every = 10;  // gamma = 1 on every such generation; 0 disables
  std::uint64_t seed = 0;
  bool log_proposals = false;

  double gamma(Index dim) const { return gamma_scale.value_or(2.38 / std::sqrt(2.0 * static_cast<double>(dim))); }

  void validate(Index dim) const {
    require(dim >= 1, "DeMcConfig: dimension must be >= 1");
    require(n_chains >= 3 && n_chains >= 2 * dim + 1, "DeMcConfig: n_chains must be >= max(3, 2*dim + 1)");
    require(!gamma_scale || (std::isfinite(*gamma_scale) && *gamma_scale > 0.0), "DeMcConfig: gamma_scale must be > 0");
    require(std::isfinite(jitter_sd) && jitter_sd >= 0.0, "DeMcConfig: jitter_sd must be >= 0");
    require(n_steps >= 1 && burn_in >= 0 && burn_in < n_steps, "DeMcConfig: need 0 <= burn_in < n_steps");
    require(thin >= 1, "DeMcConfig: thin must be >= 1");
    require(full_jump_every >= 0, "DeMcConfig: full_jump_every must be >= 0");
  }

  nlohmann::json to_json(Index dim) const {
    return {{"n_chains", n_chains}, {"gamma_scale", gamma(dim)}, {"jitter_sd", jitter_sd},
            {"n_steps", n_steps},   {"burn_in", burn_in},        {"thin", thin},
            {"full_jump_every", full_jump_every}, {"seed", seed}};
  }
};

/// One logged proposal: chain i at generation `generation` jumped by
/// gamma (x_a - x_b) + jitter, where x_a, x_b are previous-generation states.
struct Proposal {
  Index generation = 0, chain = 0, a = 0, b = 0;
  double gamma = 0.0;
  Vector x_a, x_b, jump, jitter;
  bool accepted = false;
};

struct DeMcResult {
  std::vector<RowMatrix> chains;  // per chain: kept draws x dim
  Vector acceptance;              // per chain, over all generations
  std::vector<Proposal> proposals;

  Index dim() const { return chains.empty() ? 0 : chains.front().cols(); }
  double mean_acceptance() const { return acceptance.mean(); }

  /// All kept draws, generation-major (row g * n_chains + c).
  RowMatrix pooled() const {
    const Index c = static_cast<Index>(chains.size()), k = chains.empty() ? 0 : chains.front().rows();
    RowMatrix out(c * k, dim());
    for (Index g = 0; g < k; ++g)
      for (Index i = 0; i < c; ++i) out.row(g * c + i) = chains[static_cast<std::size_t>(i)].row(g);
    return out;
  }

  /// Evenly spaced subset of the pooled draws, `n` rows.
  RowMatrix thinned_to(Index n) const {
    const RowMatrix all = pooled();
    require(n >= 1 && n <= all.rows(), "DeMcResult: cannot take that many draws");
    RowMatrix out(n, all.cols());
    for (Index k = 0; k < n; ++k) out.row(k) = all.row((k * all.rows()) / n);
    return out;
  }

  /// CSV stream with columns generation,chain,x0..x{d-1}.
  void write_csv(std::ostream& out) const {
    out << "generation,chain";
    for (Index j = 0; j < dim(); ++j) out << ",x" << j;
    out << '\n';
    out.precision(17);
    const Index k = chains.empty() ? 0 : chains.front().rows();
    for (Index g = 0; g < k; ++g)
      for (std::size_t i = 0; i < chains.size(); ++i) {
        out << g << ',' << i;
        for (Index j = 0; j < dim(); ++j) out << ',' << chains[i](g, j);
        out << '\n';
      }
  }
};

/// Differential-evolution Metropolis. Chains move in lockstep generations;
/// each proposal reads only the previous generation. Chain i draws from its
/// own stream, so results do not depend on evaluation order.
inline DeMcResult de_mc_sample(const LogDensity& logp, const DeMcConfig& cfg, const RowMatrix& init) {
  const Index dim = init.cols(), nc = cfg.n_chains;
  cfg.validate(dim);
  require(init.rows() == nc, "de_mc_sample: init must have one row per chain");
  require(init.allFinite(), "de_mc_sample: initial states must be finite");
  for (Index i = 0; i < nc; ++i)
    for (Index j = i + 1; j < nc; ++j)
      require(init.row(i) != init.row(j), "de_mc_sample: initial states must be distinct");

  std::vector<Rng> rng;
  for (Index i = 0; i < nc; ++i) rng.push_back(make_rng(cfg.seed, 0xde00 + static_cast<std::uint64_t>(i)));

  RowMatrix x = init, next(nc, dim);
  Vector lp(nc), lp_next(nc);
  for (Index i = 0; i < nc; ++i) {
    lp(i) = logp(x.row(i).transpose());
    if (std::isnan(lp(i))) throw NumericError("de_mc_sample: log density is NaN at initial state of chain " + std::to_string(i));
  }

  const Index kept = (cfg.n_steps - cfg.burn_in + cfg.thin - 1) / cfg.thin;
  DeMcResult res;
  res.chains.assign(static_cast<std::size_t>(nc), RowMatrix(kept, dim));
  Vector accepted = Vector::Zero(nc);
  const double gamma0 = cfg.gamma(dim);

  Index row = 0;
  for (Index g = 0; g < cfg.n_steps; ++g) {
    const bool full = cfg.full_jump_every > 0 && (g + 1) % cfg.full_jump_every == 0;
    const double gamma = full ? 1.0 : gamma0;
    for (Index i = 0; i < nc; ++i) {
      Rng& r = rng[static_cast<std::size_t>(i)];
      // Ordered pair (a, b), a != b, both != i, uniform over (nc-1)(nc-2) choices.
      Index a = uniform_index(r, nc - 1);
      if (a >= i) ++a;
      Index b = uniform_index(r, nc - 2);
      if (b >= std::min(a, i)) ++b;
      if (b >= std::max(a, i)) ++b;
      Vector jitter(dim);
      for (Index j = 0; j < dim; ++j) jitter(j) = cfg.jitter_sd * standard_normal(r);
      const Vector jump = gamma * (x.row(a) - x.row(b)).transpose();
      const Vector prop = x.row(i).transpose() + jump + jitter;
      const double lq = logp(prop);
      if (std::isnan(lq)) throw NumericError("de_mc_sample: log density is NaN at a proposal of chain " + std::to_string(i));
      const double log_u = std::log(uniform01(r));
      const bool acc = lq > lp(i) || log_u < lq - lp(i);
      if (acc) {
        next.row(i) = prop.transpose();
        lp_next(i) = lq;
        accepted(i) += 1.0;
      } else {
        next.row(i) = x.row(i);
        lp_next(i) = lp(i);
      }
      if (cfg.log_proposals)
        res.proposals.push_back({g, i, a, b, gamma, x.row(a).transpose(), x.row(b).transpose(), jump, jitter, acc});
    }
    x.swap(next);
    lp.swap(lp_next);
    if (g >= cfg.burn_in && (g - cfg.burn_in) % cfg.thin == 0) {
      for (Index i = 0; i < nc; ++i) res.chains[static_cast<std::size_t>(i)].row(row) = x.row(i);
      ++row;
    }
  }
  res.acceptance = accepted / static_cast<double>(cfg.n_steps);
  return res;
}

/// Effective sample size of a scalar series using Geyer's initial positive
/// sequence on the empirical autocorrelations.
inline double effective_sample_size(const Vector& x) {
  const Index n = x.size();
  require(n >= 4, "effective_sample_size: need at least 4 draws");
  const Vector c = x.array() - x.mean();
  const double c0 = c.squaredNorm() / static_cast<double>(n);
  if (c0 == 0.0) return static_cast<double>(n);
  auto rho = [&](Index lag) { return c.head(n - lag).dot(c.tail(n - lag)) / (static_cast<double>(n) * c0); };
  double tau = -1.0;
  for (Index k = 0; 2 * k + 1 < n; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) / std::max(tau, 1.0 / static_cast<double>(n));
}

}  // namespace cotfm::mcmc
