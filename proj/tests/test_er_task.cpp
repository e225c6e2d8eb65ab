#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "speedup/er_planted.hpp"
#include "speedup/er_task.hpp"
#include "speedup/search.hpp"

using namespace speedup;
using namespace speedup::er;

namespace {

Assignment random_assignment(const ProblemInstance& inst, std::mt19937_64& rng) {
  Assignment a(static_cast<std::size_t>(inst.num_variables()));
  for (int k = 0; k < inst.num_variables(); ++k) a.assign(k, std::uniform_int_distribution<int>(0, inst.arity(k) - 1)(rng));
  return a;
}

}  // namespace

TEST(ERLayout, ShapeForTwoEntities) {
  const auto inst = build_instance(2, 1, hard_profile());
  EXPECT_EQ(inst.num_variables(), 4);
  EXPECT_EQ(inst.arity(0), 4);
  EXPECT_EQ(inst.arity(1), 4);
  EXPECT_EQ(inst.arity(2), 6);
  EXPECT_EQ(inst.arity(3), 6);
  EXPECT_EQ(inst.constraints().size(), 21u);
}

TEST(ERLayout, RowCountFormula) {
  for (int E = 2; E <= 6; ++E) {
    const ERLayout layout(E);
    EXPECT_EQ(layout.num_variables(), E * E);
    EXPECT_EQ(make_constraints(layout).size(), static_cast<std::size_t>(10 * E * (E - 1) + E * (E - 1) / 2));
    EXPECT_EQ(ERLayout::from_num_variables(E * E).entities(), E);
  }
  EXPECT_THROW((void)build_instance(1, 0, hard_profile()), std::invalid_argument);
}

TEST(ERConstraints, RowsAgreeWithTheTypeRules) {
  std::mt19937_64 rng(99);
  for (int E : {2, 3}) {
    const auto inst = build_instance(E, 5, hard_profile());
    const ERLayout layout(E);
    int valid = 0;
    for (int n = 0; n < 10'000; ++n) {
      const auto a = random_assignment(inst, rng);
      const bool rules = satisfies_rules(layout, a);
      ASSERT_EQ(check_feasible(inst, a), rules) << "sample " << n;
      valid += rules;
    }
    EXPECT_GT(valid, 0);
  }
}

TEST(ERConstraints, NoEntityHasOnlyNoRelation) {
  const ERLayout layout(3);
  const auto inst = build_instance(3, 2, hard_profile());
  std::mt19937_64 rng(3);
  for (int n = 0; n < 2000; ++n) {
    auto a = random_assignment(inst, rng);
    a.assign(1, NoEnt);
    if (!check_feasible(inst, a)) continue;
    for (int rel : layout.incident_relations(1)) EXPECT_EQ(a.label(rel), NoRel);
  }
}

TEST(ERConstraints, GoldIsFeasible) {
  for (const auto& inst : build_dataset(300, {2, 3, 4}, 7, hard_profile())) {
    ASSERT_TRUE(inst.gold().has_value());
    EXPECT_TRUE(check_feasible(inst, *inst.gold()));
  }
}

TEST(ERFeatures, PersonLivesInLocation) {
  const ERLayout layout(2);
  const auto inst = build_instance(2, 1, hard_profile());
  Assignment a(4);
  a.assign(0, Person);
  a.assign(1, Location);
  a.assign(layout.relation_var(0, 1), LiveIn);
  a.assign(layout.relation_var(1, 0), NoRel);
  const ERFeatureExtractor ex;
  SparseVector expected;
  expected.set(ERFeatureExtractor::pair_src(Person, LiveIn), 1.0);
  expected.set(ERFeatureExtractor::pair_tgt(LiveIn, Location), 1.0);
  expected.set(ERFeatureExtractor::triple(Person, LiveIn, Location), 1.0);
  expected.set(ERFeatureExtractor::pair_src(Location, NoRel), 1.0);
  expected.set(ERFeatureExtractor::pair_tgt(NoRel, Person), 1.0);
  expected.set(ERFeatureExtractor::triple(Location, NoRel, Person), 1.0);
  EXPECT_EQ(ex.extract(inst, a), expected);

  Assignment partial(4);
  partial.assign(layout.relation_var(0, 1), LiveIn);
  EXPECT_EQ(ex.extract(inst, partial).nnz(), 0u);
  partial.assign(0, Person);
  EXPECT_EQ(ex.extract(inst, partial).nnz(), 1u);
}

TEST(ERFeatures, AdditiveAlongAnyOrder) {
  std::mt19937_64 rng(21);
  const ERFeatureExtractor ex;
  for (int n = 0; n < 200; ++n) {
    const auto inst = build_instance(2 + n % 4, static_cast<std::uint64_t>(n), hard_profile());
    std::vector<int> order(static_cast<std::size_t>(inst.num_variables()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto target = random_assignment(inst, rng);
    Assignment a(target.size());
    SparseVector phi;
    for (int k : order) {
      phi += ex.delta(inst, a, k, target.label(k));
      a.assign(k, target.label(k));
      ASSERT_EQ(phi, ex.extract(inst, a));
    }
  }
}

TEST(ERFeatures, NamesRoundTrip) {
  const ERFeatureExtractor ex;
  for (FeatureId id = 0; id < ERFeatureExtractor::kDimension; ++id) {
    const auto name = ex.feature_name(id);
    EXPECT_EQ(ex.feature_id(name), std::optional<FeatureId>(id)) << name;
  }
  EXPECT_EQ(ex.feature_name(ERFeatureExtractor::triple(Person, WorkFor, Organization)),
            "triple:src=person|rel=WorkFor|tgt=organization");
  EXPECT_FALSE(ex.feature_id("triple:src=person").has_value());
  EXPECT_THROW((void)ex.feature_name(ERFeatureExtractor::kDimension), std::out_of_range);
}

TEST(ERGenerator, DeterministicInSeed) {
  const auto a = build_dataset(20, {2, 3}, 11, hard_profile());
  const auto b = build_dataset(20, {2, 3}, 11, hard_profile());
  for (std::size_t n = 0; n < a.size(); ++n) {
    ASSERT_EQ(a[n].num_variables(), b[n].num_variables());
    for (int k = 0; k < a[n].num_variables(); ++k) {
      for (int i = 0; i < a[n].arity(k); ++i) EXPECT_EQ(a[n].oracle().peek(k, i), b[n].oracle().peek(k, i));
    }
  }
  EXPECT_THROW((void)profile_by_name("medium"), std::invalid_argument);
}

TEST(ERGenerator, HardProfileBreaksGreedyOften) {
  const auto data = build_dataset(1000, {2, 3}, 1, hard_profile());
  int valid = 0;
  for (const auto& inst : data) valid += check_feasible(inst, unconstrained_greedy(inst));
  EXPECT_LE(valid / 1000.0, hard_profile().target_greedy_validity);
  EXPECT_GT(valid, 0);
}

TEST(PlantedSet, CertifiedMarginMeetsTarget) {
  const auto set = plant_separable_set(50, 2, 0.5);
  EXPECT_EQ(set.instances.size(), 50u);
  EXPECT_NEAR(set.direction.norm(), 1.0, 1e-12);
  EXPECT_GE(set.certified_margin, 0.5);
  EXPECT_GT(set.entity_cost_margin, 0.0);
  for (const auto& inst : set.instances) {
    EXPECT_EQ(solve_exact(inst).assignment, *inst.gold());
    EXPECT_GE(certify_relation_margin(inst, set.direction), set.certified_margin - 1e-12);
  }
}

TEST(PlantedSet, UnreachableMarginThrows) {
  EXPECT_THROW((void)plant_separable_set(20, 2, 5.0), CalibrationFailed);
}
