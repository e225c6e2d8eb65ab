#include <gtest/gtest.h>

#include <random>

#include "speedup/er_task.hpp"
#include "speedup/lagrangian.hpp"
#include "speedup/oracles.hpp"

using namespace speedup;

namespace {

std::vector<double> random_multipliers(const ProblemInstance& inst, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> out(inst.constraints().size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = project_multiplier(inst.constraints().row(j).sense, u(rng));
  return out;
}

}  // namespace

TEST(Lagrangian, ProjectionKeepsSignCones) {
  EXPECT_EQ(project_multiplier(Sense::GreaterEqual, -1.0), 0.0);
  EXPECT_EQ(project_multiplier(Sense::GreaterEqual, 2.0), 2.0);
  EXPECT_EQ(project_multiplier(Sense::LessEqual, 2.0), 0.0);
  EXPECT_EQ(project_multiplier(Sense::LessEqual, -3.0), -3.0);
  EXPECT_EQ(project_multiplier(Sense::Equal, -3.0), -3.0);
}

TEST(Lagrangian, ZeroMultipliersGiveUnconstrainedArgmin) {
  const auto inst = er::build_instance(3, 4, er::hard_profile());
  const std::vector<double> zero(inst.constraints().size(), 0.0);
  const auto relaxed = dual_minimizer(inst, zero);
  EXPECT_EQ(relaxed.assignment, unconstrained_greedy(inst));
  EXPECT_DOUBLE_EQ(relaxed.value, objective_of(inst, relaxed.assignment));
  EXPECT_THROW((void)dual_minimizer(inst, std::vector<double>(1, 0.0)), std::invalid_argument);
}

TEST(Lagrangian, UnconstrainedSystemReturnsImmediately) {
  const ProblemInstance inst({{2, {"a", "b"}}, {3, {"a", "b", "c"}}}, {},
                             CostOracle::from_table({{0.5, -0.5}, {1.0, 2.0, -1.0}}));
  const auto state = solve_dual(inst, 100, 1e-9);
  EXPECT_TRUE(state.u.empty());
  EXPECT_EQ(state.iterations, 1);
  EXPECT_DOUBLE_EQ(state.dual_value, -1.5);
  EXPECT_THROW((void)solve_dual(inst, 0, 1e-9), std::invalid_argument);
}

TEST(Lagrangian, MinimizerMatchesEnumerationOfTheLagrangian) {
  std::mt19937_64 rng(21);
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto inst = er::build_instance(2, seed, er::hard_profile());
    const auto state = solve_dual(inst, 500, 1e-9);
    EXPECT_NEAR(dual_minimizer(inst, state).value, oracle::brute_force_dual_value(inst, state.u), 1e-9);
    const auto u = random_multipliers(inst, rng);
    const auto relaxed = dual_minimizer(inst, u);
    EXPECT_NEAR(relaxed.value, oracle::brute_force_dual_value(inst, u), 1e-9);
    EXPECT_NEAR(relaxed.value, lagrangian_value(inst, u, relaxed.assignment), 1e-9);
  }
}

TEST(Lagrangian, WeakDualityAtEveryVisitedAndRandomMultiplier) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto inst = er::build_instance(2 + static_cast<int>(seed % 2), 500 + seed, er::hard_profile());
    const double primal = oracle::brute_force_minimum(inst).minimum;
    for (int iters : {1, 3, 10, 100, 1000}) {
      EXPECT_LE(solve_dual(inst, iters, 1e-12).dual_value, primal + 1e-9 * (1.0 + std::abs(primal)));
    }
    for (int t = 0; t < 10; ++t) {
      EXPECT_LE(dual_minimizer(inst, random_multipliers(inst, rng)).value, primal + 1e-9 * (1.0 + std::abs(primal)));
    }
  }
}

TEST(Lagrangian, BestDualValueNeverDecreasesWithMoreIterations) {
  const auto inst = er::build_instance(3, 42, er::hard_profile());
  double previous = -std::numeric_limits<double>::infinity();
  for (int iters = 1; iters <= 200; iters += 7) {
    const double v = solve_dual(inst, iters, 0.0, 1.0, 1 << 30).dual_value;
    EXPECT_GE(v, previous);
    previous = v;
  }
}

TEST(Lagrangian, FeasibleUnconstrainedOptimumHasZeroGapAtZero) {
  // Costs make the gold structure every variable's cheapest label.
  const er::ERLayout layout(2);
  using namespace er;
  std::vector<std::vector<double>> costs{{-1, 0, 0, 0}, {0, -1, 0, 0}, {0, -1, 0, 0, 0, 0}, {0, 0, 0, 0, 0, -1}};
  const ProblemInstance inst(make_variables(layout), make_constraints(layout), CostOracle::from_table(costs));
  const auto state = solve_dual(inst, 100, 1e-9);
  EXPECT_DOUBLE_EQ(state.dual_value, -4.0);
  for (double u : state.u) EXPECT_EQ(u, 0.0);
  EXPECT_DOUBLE_EQ(solve_exact(inst).objective, -4.0);
}

TEST(OptimalHeuristic, EmptyNodeAndSingleRow) {
  ConstraintSystem one;
  one.add_row({{{0, 1, 2.5}}, 1.0, Sense::GreaterEqual});
  const ProblemInstance inst({{2, {"a", "b"}}}, one, CostOracle::from_table({{0.0, 1.0}}));
  DualState state;
  state.u = {0.75};
  const auto empty = optimal_heuristic_features(inst, state, SearchNode::initial(inst));
  EXPECT_TRUE(empty.phi.empty());
  EXPECT_EQ(empty.h(), 0.0);
  const auto node = SearchNode::initial(inst).child(0, 1, {});
  EXPECT_DOUBLE_EQ(optimal_heuristic_features(inst, state, node).h(), -2.5 * 0.75);
}

// h* through the feature dot product against a direct double loop over the
// assigned pairs and the rows.
TEST(OptimalHeuristic, DotProductMatchesDoubleSum) {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = er::build_instance(3, seed, er::hard_profile());
    const auto state = solve_dual(inst, 300, 1e-9);
    SearchNode v = SearchNode::initial(inst);
    for (int k = 0; k < inst.num_variables(); ++k) {
      if (rng() % 2) v = v.child(k, static_cast<int>(rng() % static_cast<std::uint64_t>(inst.arity(k))), {});
      double direct = 0.0;
      for (const auto& [kk, ii] : v.path) {
        for (std::size_t j = 0; j < inst.constraints().size(); ++j) {
          for (const auto& t : inst.constraints().row(j).terms) {
            if (t.var == kk && t.label == ii) direct += t.coeff * state.u[j];
          }
        }
      }
      EXPECT_NEAR(optimal_heuristic_features(inst, state, v).h(), -direct, 1e-12);
    }
  }
}

TEST(OptimalHeuristic, ZeroGapGreedyIsExact) {
  int zero_gap = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto inst = er::build_instance(2 + static_cast<int>(seed % 2), 900 + seed, er::hard_profile());
    const auto state = solve_dual(inst, 2000, 1e-9);
    const double primal = solve_exact(inst).objective;
    if (std::abs(primal - state.dual_value) >= 1e-6) continue;
    ++zero_gap;
    const auto greedy = greedy_with_optimal_heuristic(inst, state);
    EXPECT_TRUE(check_feasible(inst, greedy.assignment));
    EXPECT_NEAR(objective_of(inst, greedy.assignment), primal, 1e-9);
  }
  EXPECT_GT(zero_gap, 0);
}
