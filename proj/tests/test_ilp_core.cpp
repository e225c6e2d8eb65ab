#include <gtest/gtest.h>

#include <random>
#include <thread>
#include <vector>

#include "speedup/er_task.hpp"
#include "speedup/ilp_core.hpp"
#include "speedup/oracles.hpp"

using namespace speedup;

namespace {

ProblemInstance single_variable(std::vector<double> costs, ConstraintSystem rows = {}) {
  VariableSpec v{static_cast<int>(costs.size()), {}};
  for (std::size_t i = 0; i < costs.size(); ++i) v.label_names.push_back("l" + std::to_string(i));
  return ProblemInstance({v}, std::move(rows), CostOracle::from_table({std::move(costs)}));
}

// Colin (0), Ordon (1), r(C->O) (2), r(O->C) (3).
ProblemInstance figure_instance() {
  const er::ERLayout layout(2);
  std::vector<std::vector<double>> costs{{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}};
  return ProblemInstance(er::make_variables(layout), er::make_constraints(layout), CostOracle::from_table(costs));
}

// Every completion of `a`, checked row by row.
bool some_completion_feasible(const ProblemInstance& inst, Assignment a, int k = 0) {
  if (k == inst.num_variables()) return check_feasible(inst, a);
  if (a.is_assigned(k)) return some_completion_feasible(inst, a, k + 1);
  for (int i = 0; i < inst.arity(k); ++i) {
    a.assign(k, i);
    if (some_completion_feasible(inst, a, k + 1)) return true;
  }
  return false;
}

}  // namespace

TEST(ProblemInstance, RejectsBadShapes) {
  EXPECT_THROW(ProblemInstance({}, {}, CostOracle::from_table({})), std::invalid_argument);
  EXPECT_THROW(ProblemInstance({{0, {}}}, {}, CostOracle::from_table({{}})), std::invalid_argument);
  ConstraintSystem bad;
  bad.add_row({{{0, 5, 1.0}}, 1.0, Sense::Equal});
  EXPECT_THROW(single_variable({0.0, 1.0}, bad), std::invalid_argument);
  auto inst = single_variable({0.0, 1.0});
  EXPECT_THROW(inst.set_gold(Assignment(1)), std::invalid_argument);
  EXPECT_NO_THROW(inst.set_gold(Assignment{1}));
}

TEST(CostOracle, MemoizesAndCountsDistinctPairs) {
  int source_calls = 0;
  CostOracle oracle({2, 3}, [&](int k, int i) {
    ++source_calls;
    return 0.1 * (k + 1) + i;
  });
  const double first = oracle.resolve(1, 2);
  EXPECT_EQ(oracle.call_count(), 1);
  EXPECT_EQ(oracle.resolve(1, 2), first);
  EXPECT_EQ(oracle.call_count(), 1);
  EXPECT_EQ(source_calls, 1);
  (void)oracle.peek(0, 0);
  EXPECT_EQ(oracle.call_count(), 1);
  EXPECT_FALSE(oracle.is_resolved(0, 0));
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < (k ? 3 : 2); ++i) (void)oracle.resolve(k, i);
  }
  EXPECT_EQ(oracle.call_count(), oracle.total_coefficients());
  EXPECT_THROW((void)oracle.resolve(0, 2), std::out_of_range);
  oracle.reset();
  EXPECT_EQ(oracle.call_count(), 0);
}

TEST(CostOracle, ConcurrentResolutionCountsOnce) {
  CostOracle oracle({50}, [](int, int i) { return static_cast<double>(i); });
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int rep = 0; rep < 20; ++rep) {
        for (int i = 0; i < 50; ++i) (void)oracle.resolve(0, i);
      }
    });
  }
  threads.clear();
  EXPECT_EQ(oracle.call_count(), 50);
}

TEST(CheckFeasible, FigureExample) {
  const auto inst = figure_instance();
  using namespace er;
  EXPECT_TRUE(check_feasible(inst, Assignment{Person, Location, LiveIn, NoRel}));
  EXPECT_FALSE(check_feasible(inst, Assignment{Location, Location, LiveIn, NoRel}));
  EXPECT_FALSE(check_feasible(inst, Assignment{Person, Person, Kill, Kill}));
  EXPECT_THROW((void)check_feasible(inst, Assignment(4)), IncompleteAssignment);
}

TEST(PartialFeasible, Examples) {
  const auto inst = figure_instance();
  using namespace er;
  EXPECT_TRUE(partial_feasible(inst, Assignment(4)));
  Assignment live(4);
  live.assign(2, LiveIn);
  EXPECT_TRUE(partial_feasible(inst, live));
  Assignment noent = live;
  noent.assign(0, NoEnt);
  EXPECT_FALSE(partial_feasible(inst, noent));
  EXPECT_EQ(partial_feasible(inst, noent), some_completion_feasible(inst, noent));
}

TEST(PartialFeasible, AgreesWithExhaustiveCompletionOnRandomPrefixes) {
  const auto inst = figure_instance();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    Assignment a(4);
    for (int k = 0; k < 4; ++k) {
      if (u(rng) < 0.5) a.assign(k, std::uniform_int_distribution<int>(0, inst.arity(k) - 1)(rng));
    }
    ASSERT_EQ(partial_feasible(inst, a), some_completion_feasible(inst, a)) << "trial " << trial;
    if (a.complete() && check_feasible(inst, a)) EXPECT_TRUE(partial_feasible(inst, a));
  }
}

TEST(ObjectiveOf, Examples) {
  auto zero = single_variable({0.0, 0.0});
  EXPECT_EQ(objective_of(zero, Assignment{1}), 0.0);
  const ProblemInstance two({{2, {"a", "b"}}, {2, {"a", "b"}}}, {}, CostOracle::from_table({{1, 2}, {3, 4}}));
  EXPECT_EQ(objective_of(two, Assignment{1, 0}), 5.0);
  EXPECT_EQ(two.oracle().call_count(), 2);
  EXPECT_THROW((void)objective_of(two, Assignment(2)), IncompleteAssignment);
}

TEST(SolveExact, SingleVariable) {
  const auto free = solve_exact(single_variable({0.0, 1.0}));
  EXPECT_EQ(free.assignment, (Assignment{0}));
  EXPECT_EQ(free.objective, 0.0);

  ConstraintSystem force;
  force.add_row({{{0, 1, 1.0}}, 1.0, Sense::Equal});
  const auto forced = solve_exact(single_variable({0.0, 1.0}, force));
  EXPECT_EQ(forced.assignment, (Assignment{1}));
  EXPECT_EQ(forced.objective, 1.0);
}

TEST(SolveExact, ErrorPaths) {
  ConstraintSystem impossible;
  impossible.add_row({{{0, 0, 1.0}}, 2.0, Sense::GreaterEqual});
  EXPECT_THROW((void)solve_exact(single_variable({0.0, 1.0}, impossible)), Infeasible);
  const auto inst = er::build_instance(3, 5, er::hard_profile());
  EXPECT_THROW((void)solve_exact(inst, 3), BudgetExhausted);
  EXPECT_THROW((void)solve_exact(inst, 0), std::invalid_argument);
}

TEST(SolveExact, TiesGoToLexicographicallySmallest) {
  const auto sol = solve_exact(single_variable({1.0, 0.5, 0.5, 0.7}));
  EXPECT_EQ(sol.assignment, (Assignment{1}));
  const ProblemInstance two({{2, {"a", "b"}}, {2, {"a", "b"}}}, {}, CostOracle::from_table({{0, 0}, {1, 1}}));
  EXPECT_EQ(solve_exact(two).assignment, (Assignment{0, 0}));
}

// Twenty two-entity instances: the 576-candidate enumeration and the solver
// agree on objective and assignment.
TEST(SolveExact, MatchesEnumerationOnTwoEntityInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = er::build_instance(2, seed, er::hard_profile());
    ASSERT_EQ(inst.total_coefficients(), 4 + 4 + 6 + 6);
    const auto ref = oracle::brute_force_minimum(inst);
    const auto sol = solve_exact(inst);
    ASSERT_TRUE(ref.argmin);
    EXPECT_EQ(sol.objective, ref.minimum);
    EXPECT_EQ(sol.assignment, *ref.argmin);
    EXPECT_TRUE(check_feasible(inst, sol.assignment));
    EXPECT_EQ(objective_of(inst, sol.assignment), sol.objective);
    EXPECT_LE(inst.oracle().call_count(), inst.total_coefficients());
  }
}

TEST(SolveExact, NoFeasibleAssignmentBeatsTheSolver) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto inst = er::build_instance(2, seed, er::hard_profile());
    const double best = solve_exact(inst).objective;
    Assignment a(4);
    for (int e0 = 0; e0 < 4; ++e0)
      for (int e1 = 0; e1 < 4; ++e1)
        for (int r0 = 0; r0 < 6; ++r0)
          for (int r1 = 0; r1 < 6; ++r1) {
            const Assignment z{e0, e1, r0, r1};
            if (check_feasible(inst, z)) ASSERT_LE(best, objective_of(inst, z));
          }
  }
}

TEST(SolveExact, Deterministic) {
  const auto inst = er::build_instance(3, 77, er::hard_profile());
  EXPECT_EQ(solve_exact(inst).assignment, solve_exact(inst).assignment);
}

TEST(SolveExact, EmptyConstraintSystemIsPerVariableArgmin) {
  const ProblemInstance inst({{3, {"a", "b", "c"}}, {2, {"a", "b"}}}, {},
                             CostOracle::from_table({{0.3, -0.1, 0.2}, {0.0, -2.0}}));
  EXPECT_EQ(solve_exact(inst).assignment, (Assignment{1, 1}));
}
