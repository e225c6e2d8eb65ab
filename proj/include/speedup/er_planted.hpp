#pragma once

// Linearly separable entity-relation training sets with a planted separating
// direction, certified by exhaustive per-level enumeration.
//
// Entities take pairwise distinct types drawn from a pool, so the correct
// relation label of every ordered pair is a function of its endpoint types.
// Entity levels carry no features; there the gold label is certified to be
// the strict cost argmin instead, so no search mistake can arise at them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "speedup/er_task.hpp"
#include "speedup/errors.hpp"
#include "speedup/ilp_core.hpp"
#include "speedup/sparse_vector.hpp"

namespace speedup::er {

struct PlantedSet {
  std::vector<ProblemInstance> instances;
  SparseVector direction;             // unit norm
  double certified_margin = 0.0;      // min over relation levels of direction . (phi_good - phi_bad)
  double entity_cost_margin = 0.0;    // min gap between gold and runner-up entity cost
  std::vector<int> type_pool;
  int attempts = 0;
};

namespace detail {

inline int planted_relation(int source_type, int target_type) {
  return ERSchema::allowed_relation(source_type, target_type).value_or(NoRel);
}

// Type pools tried in order; smaller pools give fewer distinct contexts and a
// larger achievable margin.
inline std::vector<std::vector<int>> planted_pools() {
  return {{Person, Location, Organization, NoEnt}, {Person, Location, Organization}, {Person, Location}};
}

inline ProblemInstance planted_instance(int entities, const std::vector<int>& pool, std::mt19937_64& rng) {
  const ERLayout layout(entities);
  std::vector<int> types = pool;
  std::shuffle(types.begin(), types.end(), rng);
  types.resize(static_cast<std::size_t>(entities));

  Assignment gold(static_cast<std::size_t>(layout.num_variables()));
  for (int e = 0; e < entities; ++e) gold.assign(e, types[static_cast<std::size_t>(e)]);
  for (int k = entities; k < layout.num_variables(); ++k) {
    const auto [s, t] = layout.endpoints(k);
    gold.assign(k, planted_relation(types[static_cast<std::size_t>(s)], types[static_cast<std::size_t>(t)]));
  }

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> costs(static_cast<std::size_t>(layout.num_variables()));
  for (int k = 0; k < layout.num_variables(); ++k) {
    auto& c = costs[static_cast<std::size_t>(k)];
    if (layout.is_entity(k)) {
      c.resize(kEntityArity);
      for (auto& v : c) v = -u(rng);
      c[static_cast<std::size_t>(gold.label(k))] = -2.0;
      continue;
    }
    c.resize(kRelationArity);
    for (auto& v : c) v = 0.4 * u(rng) - 0.2;
    c[static_cast<std::size_t>(gold.label(k))] = -1.0;
    // Half of the relations prefer a label that breaks the type rules.
    if (u(rng) < 0.5) {
      const auto [s, t] = layout.endpoints(k);
      std::vector<int> clashing;
      for (int r = 0; r < NoRel; ++r) {
        const auto rule = ERSchema::rule(r);
        if (rule->source != gold.label(s) || rule->target != gold.label(t)) clashing.push_back(r);
      }
      const int bad = clashing[std::uniform_int_distribution<std::size_t>(0, clashing.size() - 1)(rng)];
      c[static_cast<std::size_t>(bad)] = -1.0 - 0.1 - 0.4 * u(rng);
    }
  }
  return ProblemInstance(make_variables(layout), make_constraints(layout), CostOracle::from_table(std::move(costs)),
                         gold);
}

// +5 on every correct context triple, -1 on every wrong one, normalized.
inline SparseVector planted_direction(const std::set<std::pair<int, int>>& contexts) {
  SparseVector w;
  for (const auto& [s, t] : contexts) {
    const int good = planted_relation(s, t);
    for (int r = 0; r < kRelationArity; ++r) w.add(ERFeatureExtractor::triple(s, r, t), r == good ? 5.0 : -1.0);
  }
  SparseVector unit;
  unit.axpy(1.0 / w.norm(), w);
  return unit;
}

}  // namespace detail

/// Exhaustive check: along the gold path in index order, every child of the
/// gold prefix that deviates at a relation level scores at least `margin`
/// below the gold child under `direction`. Returns the smallest gap seen.
inline double certify_relation_margin(const ProblemInstance& instance, const SparseVector& direction) {
  const auto layout = ERLayout::from_num_variables(instance.num_variables());
  const ERFeatureExtractor extractor;
  const Assignment& gold = *instance.gold();
  Assignment prefix(static_cast<std::size_t>(instance.num_variables()));
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < instance.num_variables(); ++k) {
    if (layout.is_relation(k)) {
      Assignment good = prefix;
      good.assign(k, gold.label(k));
      const double good_score = direction.dot(extractor.extract(instance, good));
      for (int r = 0; r < instance.arity(k); ++r) {
        if (r == gold.label(k)) continue;
        Assignment bad = prefix;
        bad.assign(k, r);
        worst = std::min(worst, good_score - direction.dot(extractor.extract(instance, bad)));
      }
    }
    prefix.assign(k, gold.label(k));
  }
  return worst;
}

/// Gap between the gold entity cost and the cheapest other label, minimized
/// over entities.
inline double entity_cost_margin(const ProblemInstance& instance) {
  const auto layout = ERLayout::from_num_variables(instance.num_variables());
  double worst = std::numeric_limits<double>::infinity();
  for (int e = 0; e < layout.entities(); ++e) {
    const int g = instance.gold()->label(e);
    for (int i = 0; i < instance.arity(e); ++i) {
      if (i != g) worst = std::min(worst, instance.oracle().peek(e, i) - instance.oracle().peek(e, g));
    }
  }
  return worst;
}

/// `count` instances with E entities whose gold structure is the exact
/// solver's answer and is separable with level margin >= margin_target.
inline PlantedSet plant_separable_set(std::size_t count, int entities, double margin_target,
                                      std::uint64_t seed = 2024) {
  if (!(margin_target > 0.0)) throw std::invalid_argument("margin_target must be > 0");
  if (count == 0) throw std::invalid_argument("count must be >= 1");
  const auto pools = detail::planted_pools();
  int attempt = 0;
  for (const auto& pool : pools) {
    ++attempt;
    if (entities < 2 || static_cast<std::size_t>(entities) > pool.size()) continue;
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    PlantedSet out;
    out.type_pool = pool;
    out.attempts = attempt;
    std::set<std::pair<int, int>> contexts;
    while (out.instances.size() < count) {
      ProblemInstance inst = detail::planted_instance(entities, pool, rng);
      // The planted structure must be what the exact solver returns.
      if (solve_exact(inst).assignment != inst.gold()) continue;
      inst.oracle().reset();
      const auto layout = ERLayout::from_num_variables(inst.num_variables());
      for (int k = entities; k < layout.num_variables(); ++k) {
        const auto [s, t] = layout.endpoints(k);
        contexts.emplace(inst.gold()->label(s), inst.gold()->label(t));
      }
      out.instances.push_back(std::move(inst));
    }
    out.direction = detail::planted_direction(contexts);
    out.certified_margin = std::numeric_limits<double>::infinity();
    out.entity_cost_margin = std::numeric_limits<double>::infinity();
    for (const auto& inst : out.instances) {
      out.certified_margin = std::min(out.certified_margin, certify_relation_margin(inst, out.direction));
      out.entity_cost_margin = std::min(out.entity_cost_margin, entity_cost_margin(inst));
    }
    if (out.certified_margin >= margin_target && out.entity_cost_margin > 0.0) return out;
  }
  throw CalibrationFailed("no separable set reached margin " + std::to_string(margin_target) + " after " +
                          std::to_string(attempt) + " attempts");
}

}  // namespace speedup::er
