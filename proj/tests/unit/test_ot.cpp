#include "cotfm/ot/coupling.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

using namespace cotfm;
using namespace cotfm::ot;

namespace {

RowMatrix random_matrix(Rng& rng, Index n, Index m, double scale = 1.0) {
  RowMatrix c(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) c(i, j) = scale * uniform01(rng);
  return c;
}

Vector uniform_weights(Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

DiscreteMeasure point(double y, double u) {
  RowMatrix p(1, 2);
  p << y, u;
  return DiscreteMeasure::uniform(p, 1);
}

}  // namespace

// ---------------------------------------------------------------- cost matrix

TEST(CostMatrix, TriangularCostHandValues) {
  EXPECT_DOUBLE_EQ(cost_matrix(point(0, 0), point(0, 1), CostSpec::cot(0.01))(0, 0), 0.01);
  EXPECT_DOUBLE_EQ(cost_matrix(point(0, 5), point(1, 5), CostSpec::cot(0.01))(0, 0), 1.0);
  EXPECT_EQ(cost_matrix(point(0.3, -2), point(0.3, -2), CostSpec::cot(0.01))(0, 0), 0.0);
}

TEST(CostMatrix, PowerOneAndEuclidean) {
  // |dy| + eps |du| and plain euclidean distance.
  EXPECT_DOUBLE_EQ(cost_matrix(point(0, 0), point(3, 4), CostSpec::cot(0.5, 1))(0, 0), 3.0 + 0.5 * 4.0);
  EXPECT_DOUBLE_EQ(cost_matrix(point(0, 0), point(3, 4), CostSpec::euclidean(1))(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(cost_matrix(point(0, 0), point(3, 4), CostSpec::euclidean(2))(0, 0), 25.0);
}

TEST(CostMatrix, SymmetricOnSelf) {
  Rng rng = make_rng(3);
  auto mu = DiscreteMeasure::uniform(normal_matrix(rng, 9, 3), 1);
  const RowMatrix c = cost_matrix(mu, mu, CostSpec::cot(0.1));
  EXPECT_EQ((c - c.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(c.diagonal().cwiseAbs().maxCoeff(), 0.0);
}

TEST(CostMatrix, RejectsBadInput) {
  RowMatrix p3(1, 3);
  p3 << 0, 0, 0;
  auto a = DiscreteMeasure::uniform(p3, 1);
  EXPECT_THROW(cost_matrix(point(0, 0), a, CostSpec::cot(0.1)), InvalidArgument);
  EXPECT_THROW(cost_matrix(point(0, 0), point(0, 0), CostSpec::cot(0.0)), InvalidArgument);
  EXPECT_THROW(cost_matrix(point(0, 0), point(0, 0), CostSpec::cot(-1.0)), InvalidArgument);
}

TEST(DiscreteMeasureTest, Validation) {
  RowMatrix p(2, 2);
  p << 0, 1, 2, 3;
  EXPECT_THROW(DiscreteMeasure(p, Vector::Constant(2, 0.6), 1), InvalidArgument);
  Vector neg(2);
  neg << 1.5, -0.5;
  EXPECT_THROW(DiscreteMeasure(p, neg, 1), InvalidArgument);
  EXPECT_THROW(DiscreteMeasure(p, Vector::Constant(2, 0.5), 2), InvalidArgument);  // d_u = 0
  EXPECT_NO_THROW(DiscreteMeasure(p, Vector::Constant(2, 0.5), 1));
}

// ---------------------------------------------------------------- exact solver

TEST(SolveExact, SingleAtom) {
  RowMatrix c(1, 1);
  c << 2.5;
  const auto plan = solve_exact(c, Vector::Ones(1), Vector::Ones(1));
  EXPECT_EQ(plan.matrix(0, 0), 1.0);
  EXPECT_EQ(plan.cost_value, 2.5);
}

TEST(SolveExact, TwoByTwoIdentity) {
  RowMatrix c(2, 2);
  c << 0, 1, 1, 0;
  const auto plan = solve_exact(c, uniform_weights(2), uniform_weights(2));
  EXPECT_EQ(plan.matrix(0, 0), 0.5);
  EXPECT_EQ(plan.matrix(1, 1), 0.5);
  EXPECT_EQ(plan.matrix(0, 1), 0.0);
  EXPECT_EQ(plan.cost_value, 0.0);
}

TEST(SolveExact, MatchesPermutationEnumerationForAllSmallSizes) {
  Rng rng = make_rng(11);
  for (Index n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 40; ++trial) {
      const RowMatrix c = random_matrix(rng, n, n, 10.0);
      const auto plan = solve_exact(c, uniform_weights(n), uniform_weights(n));
      // Same per-entry product and row order as the solver's cost, so the
      // optimal permutation gives a bit-identical sum.
      const double inv_n = 1.0 / static_cast<double>(n);
      std::vector<Index> perm;
      oracle::permutation_minimum(c, &perm);
      double oracle = 0.0;
      for (Index i = 0; i < n; ++i) oracle += inv_n * c(i, perm[i]);
      EXPECT_EQ(plan.cost_value, oracle) << "n=" << n << " trial=" << trial;
      EXPECT_TRUE(plan.is_feasible(1e-12));
    }
  }
}

TEST(SolveExact, IntegerCostsWithTies) {
  // Many equal-cost optima; the value must still be minimal and deterministic.
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    RowMatrix c(5, 5);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j) c(i, j) = static_cast<double>(uniform_index(rng, 3));
    const auto p1 = solve_exact(c, uniform_weights(5), uniform_weights(5));
    const auto p2 = solve_exact(c, uniform_weights(5), uniform_weights(5));
    EXPECT_NEAR(p1.cost_value, oracle::permutation_minimum(c), 1e-15);
    EXPECT_EQ((p1.matrix - p2.matrix).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SolveExact, NetworkSimplexMatchesSplitAtomOracle) {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const Index n = 1 + uniform_index(rng, 4), m = 1 + uniform_index(rng, 4);
    // Random integer compositions of 7 units.
    auto compose = [&](Index parts) {
      std::vector<int> k(parts, 1);
      for (int extra = static_cast<int>(7 - parts); extra > 0; --extra) ++k[uniform_index(rng, parts)];
      return k;
    };
    const auto ka = compose(n), kb = compose(m);
    Vector a(n), b(m);
    for (Index i = 0; i < n; ++i) a(i) = ka[i] / 7.0;
    for (Index j = 0; j < m; ++j) b(j) = kb[j] / 7.0;
    const RowMatrix c = random_matrix(rng, n, m, 5.0);
    const auto plan = solve_exact(c, a, b);
    EXPECT_NEAR(plan.cost_value, oracle::split_atoms_minimum(c, ka, kb), 1e-12) << "trial " << trial;
    EXPECT_TRUE(plan.is_feasible(1e-12));
  }
}

TEST(SolveExact, NetworkSimplexAgreesWithAssignmentOnUniformInstances) {
  Rng rng = make_rng(8);
  for (Index n : {5, 20, 60}) {
    const RowMatrix c = random_matrix(rng, n, n);
    const auto a = solve_exact(c, uniform_weights(n), uniform_weights(n));
    const auto b = solve_network_simplex(c, uniform_weights(n), uniform_weights(n));
    EXPECT_NEAR(a.cost_value, b.cost_value, 1e-12);
    EXPECT_TRUE(b.is_feasible(1e-12));
  }
}

TEST(SolveExact, RectangularNonUniformFeasibleAndNotWorseThanSinkhorn) {
  Rng rng = make_rng(9);
  const Index n = 30, m = 45;
  Vector a = Vector::NullaryExpr(n, [&](Index) { return 0.1 + uniform01(rng); });
  Vector b = Vector::NullaryExpr(m, [&](Index) { return 0.1 + uniform01(rng); });
  a /= a.sum();
  b /= b.sum();
  const RowMatrix c = random_matrix(rng, n, m);
  const auto exact = solve_exact(c, a, b);
  EXPECT_TRUE(exact.is_feasible(1e-12));
  const auto ent = solve_sinkhorn(c, a, b, 1e-3, 20000, 1e-10);
  EXPECT_LE(exact.cost_value, ent.cost_value + 1e-9);
}

TEST(SolveExact, RejectsInfeasibleMarginals) {
  RowMatrix c = RowMatrix::Zero(2, 2);
  Vector a(2), b(2);
  a << 0.5, 0.5;
  b << 0.5, 0.6;
  EXPECT_THROW(solve_exact(c, a, b), InvalidArgument);
  c(0, 1) = std::nan("");
  EXPECT_THROW(solve_exact(c, a, a), InvalidArgument);
}

// ---------------------------------------------------------------- sinkhorn

TEST(Sinkhorn, SingleAtom) {
  RowMatrix c(1, 1);
  c << 3.0;
  for (double reg : {1e-3, 1.0, 10.0}) {
    const auto plan = solve_sinkhorn(c, Vector::Ones(1), Vector::Ones(1), reg);
    EXPECT_NEAR(plan.matrix(0, 0), 1.0, 1e-15);
  }
}

TEST(Sinkhorn, SmallRegApproachesExact) {
  RowMatrix c(2, 2);
  c << 0, 1, 1, 0;
  const auto ent = solve_sinkhorn(c, uniform_weights(2), uniform_weights(2), 1e-3);
  const auto ex = solve_exact(c, uniform_weights(2), uniform_weights(2));
  EXPECT_TRUE(ent.converged);
  EXPECT_LE((ent.matrix - ex.matrix).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Sinkhorn, MarginalViolationWithinTolAndPositiveEntries) {
  Rng rng = make_rng(16);
  const RowMatrix c = random_matrix(rng, 16, 16);
  const double tol = 1e-9;
  const auto plan = solve_sinkhorn(c, uniform_weights(16), uniform_weights(16), 0.05, 10000, tol);
  EXPECT_TRUE(plan.converged);
  EXPECT_LE(plan.marginal_violation, tol);
  EXPECT_GT(plan.matrix.minCoeff(), 0.0);
}

TEST(Sinkhorn, CostAboveExactAndGapShrinksWithReg) {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 12;
    const RowMatrix c = random_matrix(rng, n, n);
    const double exact = solve_exact(c, uniform_weights(n), uniform_weights(n)).cost_value;
    double previous_gap = kInf;
    for (double reg : {1.0, 0.1, 0.01}) {
      const auto plan = solve_sinkhorn(c, uniform_weights(n), uniform_weights(n), reg, 100000, 1e-12);
      const double gap = plan.cost_value - exact;
      EXPECT_GE(gap, -1e-10);
      EXPECT_LT(gap, previous_gap);
      previous_gap = gap;
    }
  }
}

TEST(Sinkhorn, FlagsNonConvergenceAndRejectsNonFinite) {
  Rng rng = make_rng(18);
  const RowMatrix c = random_matrix(rng, 8, 8);
  const auto plan = solve_sinkhorn(c, uniform_weights(8), uniform_weights(8), 1e-3, 1, 1e-300);
  EXPECT_FALSE(plan.converged);
  EXPECT_EQ(plan.iterations, 1);
  RowMatrix bad = c;
  bad(2, 3) = kInf;
  EXPECT_THROW(solve_sinkhorn(bad, uniform_weights(8), uniform_weights(8), 0.1), InvalidArgument);
  EXPECT_THROW(solve_sinkhorn(c, uniform_weights(8), uniform_weights(8), 0.0), InvalidArgument);
}

// ---------------------------------------------------------------- pair sampling

TEST(SamplePairs, PermutationPlanStaysOnDiagonal) {
  const RowMatrix plan = RowMatrix::Identity(5, 5) / 5.0;
  Rng rng = make_rng(1);
  for (const auto& [i, j] : sample_pairs(plan, 1000, rng)) EXPECT_EQ(i, j);
}

TEST(SamplePairs, PointMass) {
  RowMatrix plan = RowMatrix::Zero(2, 3);
  plan(0, 1) = 1.0;
  Rng rng = make_rng(2);
  for (const auto& pr : sample_pairs(plan, 100, rng)) EXPECT_EQ(pr, (IndexPair{0, 1}));
}

TEST(SamplePairs, FrequenciesWithinMultinomialBounds) {
  RowMatrix plan(3, 3);
  plan << 0.05, 0.10, 0.05, 0.20, 0.0, 0.15, 0.10, 0.25, 0.10;
  const Index draws = 100000;
  Rng rng = make_rng(3);
  std::map<IndexPair, Index> counts;
  for (const auto& pr : sample_pairs(plan, draws, rng)) ++counts[pr];
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      const double p = plan(i, j);
      const double expected = p * draws;
      const double sd = std::sqrt(draws * p * (1.0 - p));
      EXPECT_LE(std::abs(static_cast<double>(counts[{i, j}]) - expected), 3.0 * sd + 1e-12) << i << "," << j;
    }
}

TEST(SamplePairs, DeterministicAndErrors) {
  const RowMatrix plan = RowMatrix::Constant(3, 4, 1.0 / 12.0);
  Rng r1 = make_rng(99), r2 = make_rng(99);
  EXPECT_EQ(sample_pairs(plan, 50, r1), sample_pairs(plan, 50, r2));
  EXPECT_THROW(sample_pairs(RowMatrix::Zero(2, 2), 3, r1), InvalidArgument);
  EXPECT_THROW(sample_pairs(plan, 0, r1), InvalidArgument);
}

// ---------------------------------------------------------------- cot coupling

TEST(CotCoupling, TransportsWithinYGroupsAsEpsVanishes) {
  // Three atoms at y = 0 and three at y = 1 on each side.
  Rng rng = make_rng(31);
  RowMatrix s(6, 2), t(6, 2);
  for (Index i = 0; i < 6; ++i) {
    s(i, 0) = t(i, 0) = i < 3 ? 0.0 : 1.0;
    s(i, 1) = 4.0 * standard_normal(rng);
    t(i, 1) = 4.0 * standard_normal(rng);
  }
  const auto src = DiscreteMeasure::uniform(s, 1), tgt = DiscreteMeasure::uniform(t, 1);
  const auto plan = cot_coupling(src, tgt, 1e-6);
  double expected = 0.0;
  for (Index g = 0; g < 2; ++g) {
    RowMatrix block(3, 3);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) {
        block(i, j) = std::pow(t(3 * g + j, 1) - s(3 * g + i, 1), 2);
        if (plan.matrix(3 * g + i, 3 * (1 - g) + j) != 0.0) ADD_FAILURE() << "cross-group mass";
      }
    expected += 0.5 * oracle::permutation_minimum(block);
  }
  double u_cost = 0.0;
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) u_cost += plan.matrix(i, j) * std::pow(t(j, 1) - s(i, 1), 2);
  EXPECT_NEAR(u_cost, expected, 1e-12);
  EXPECT_NEAR(plan.cost_value, 1e-6 * expected, 1e-15);
}

TEST(CotCoupling, IdentityCouplingHasZeroCost) {
  Rng rng = make_rng(32);
  const auto mu = DiscreteMeasure::uniform(normal_matrix(rng, 12, 3), 2);
  EXPECT_EQ(cot_coupling(mu, mu, 1e-2).cost_value, 0.0);
}

TEST(CotCoupling, CounterexampleCostIsEpsKSquared) {
  // eta_k = 1/2 (d(y0,u0) + d(y1,uk)), nu_k = 1/2 (d(y1,u0) + d(y0,uk)), uk = (k+1) u0.
  const double eps = 1e-6, k = 3.0, u0 = 1.0;
  RowMatrix e(2, 2), v(2, 2);
  e << 0.0, u0, 1.0, (k + 1) * u0;
  v << 1.0, u0, 0.0, (k + 1) * u0;
  const auto plan = cot_coupling(DiscreteMeasure::uniform(e, 1), DiscreteMeasure::uniform(v, 1), eps);
  EXPECT_NEAR(plan.cost_value, eps * k * k * u0 * u0, 1e-15);
}

TEST(CotCoupling, OptimalCostNondecreasingInEps) {
  Rng rng = make_rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const auto src = DiscreteMeasure::uniform(normal_matrix(rng, 15, 3), 1);
    const auto tgt = DiscreteMeasure::uniform(normal_matrix(rng, 15, 3), 1);
    double previous = -1.0;
    for (double eps : {1e-6, 1e-4, 1e-2, 1e-1, 1.0}) {
      const double c = cot_coupling(src, tgt, eps).cost_value;
      EXPECT_GE(c, previous - 1e-14);
      previous = c;
    }
  }
}

TEST(CotCoupling, SinkhornRouteApproximatesExact) {
  Rng rng = make_rng(34);
  const auto src = DiscreteMeasure::uniform(normal_matrix(rng, 10, 2), 1);
  const auto tgt = DiscreteMeasure::uniform(normal_matrix(rng, 10, 2), 1);
  const auto ex = cot_coupling(src, tgt, 0.1);
  const auto ent = cot_coupling(src, tgt, 0.1, SolverMethod::sinkhorn(1e-2, 50000, 1e-6));
  EXPECT_TRUE(ent.converged);
  // A violation of 1e-6 can shift the cost by at most max(C) * 1e-6.
  EXPECT_GE(ent.cost_value, ex.cost_value - 11.0 * 1e-6);
  // Entropic bias is at most reg * log(n * m).
  EXPECT_LE(ent.cost_value - ex.cost_value, 1e-2 * std::log(100.0));
}

// ---------------------------------------------------------------- export

TEST(PlanExport, CsvAndJson) {
  RowMatrix c(2, 2);
  c << 0, 1, 1, 0;
  const auto plan = solve_exact(c, uniform_weights(2), uniform_weights(2));
  std::ostringstream os;
  write_plan_csv(os, plan);
  EXPECT_EQ(os.str(), "i,j,mass\n0,0,0.5\n1,1,0.5\n");
  const auto j = plan_to_json(plan);
  EXPECT_EQ(j["matrix"][0][0].get<double>(), 0.5);
  EXPECT_EQ(j["matrix"][0][1].get<double>(), 0.0);
  EXPECT_EQ(j["rows"].get<int>(), 2);
}
