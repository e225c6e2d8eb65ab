#pragma once

// Entity-relation instantiation: E entity variables (arity 4) followed by one
// directed relation variable (arity 6) per ordered entity pair. Structural
// rows encode the relation type rules and the one-direction-only rule.

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "speedup/ilp_core.hpp"
#include "speedup/search.hpp"
#include "speedup/sparse_vector.hpp"

namespace speedup::er {

enum Entity : int { Person = 0, Location = 1, Organization = 2, NoEnt = 3 };
enum Relation : int { Kill = 0, LiveIn = 1, WorkFor = 2, LocatedAt = 3, OrgBasedIn = 4, NoRel = 5 };

inline constexpr int kEntityArity = 4;
inline constexpr int kRelationArity = 6;

struct TypeRule {
  Entity source;
  Entity target;
};

struct ERSchema {
  std::array<std::string_view, kEntityArity> entity_labels{"person", "location", "organization", "NoEnt"};
  std::array<std::string_view, kRelationArity> relation_labels{"Kill", "LiveIn", "WorkFor", "LocatedAt",
                                                               "OrgBasedIn", "NoRel"};

  /// Required (source, target) types; NoRel has no rule.
  static constexpr std::optional<TypeRule> rule(int relation) {
    switch (relation) {
      case Kill: return TypeRule{Person, Person};
      case LiveIn: return TypeRule{Person, Location};
      case WorkFor: return TypeRule{Person, Organization};
      case LocatedAt: return TypeRule{Location, Location};
      case OrgBasedIn: return TypeRule{Organization, Location};
      default: return std::nullopt;
    }
  }

  /// The typed relation allowed between two entity types, if any.
  static constexpr std::optional<int> allowed_relation(int source, int target) {
    for (int r = 0; r < NoRel; ++r) {
      const auto tr = rule(r);
      if (tr && tr->source == source && tr->target == target) return r;
    }
    return std::nullopt;
  }
};

inline const ERSchema& schema() {
  static const ERSchema s;
  return s;
}

/// Variable layout: entities 0..E-1, then relations for ordered pairs (i, j),
/// i != j, in lexicographic order.
class ERLayout {
 public:
  explicit ERLayout(int entities) : entities_(entities) {
    if (entities < 2) throw std::invalid_argument("entity-relation instances need E >= 2");
    for (int i = 0; i < entities; ++i) {
      for (int j = 0; j < entities; ++j) {
        if (i != j) pairs_.emplace_back(i, j);
      }
    }
    incident_.resize(static_cast<std::size_t>(entities));
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const int k = entities + static_cast<int>(p);
      incident_[static_cast<std::size_t>(pairs_[p].first)].push_back(k);
      incident_[static_cast<std::size_t>(pairs_[p].second)].push_back(k);
    }
  }

  static ERLayout from_num_variables(int K) {
    for (int e = 2; e * e <= K; ++e) {
      if (e * e == K) return ERLayout(e);  // K = E + E(E-1) = E^2
    }
    throw std::invalid_argument("variable count does not match an entity-relation layout");
  }

  int entities() const noexcept { return entities_; }
  int num_variables() const noexcept { return entities_ * entities_; }
  int num_relations() const noexcept { return static_cast<int>(pairs_.size()); }
  bool is_entity(int k) const noexcept { return k < entities_; }
  bool is_relation(int k) const noexcept { return k >= entities_; }

  std::pair<int, int> endpoints(int k) const { return pairs_.at(static_cast<std::size_t>(k - entities_)); }

  int relation_var(int source, int target) const {
    if (source == target) throw std::invalid_argument("no self relations");
    // Row `source` holds E-1 targets, skipping the diagonal.
    return entities_ + source * (entities_ - 1) + (target < source ? target : target - 1);
  }

  const std::vector<int>& incident_relations(int entity) const {
    return incident_.at(static_cast<std::size_t>(entity));
  }

 private:
  int entities_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::vector<int>> incident_;
};

inline std::vector<VariableSpec> make_variables(const ERLayout& layout) {
  std::vector<VariableSpec> vars;
  const auto& s = schema();
  for (int k = 0; k < layout.num_variables(); ++k) {
    VariableSpec v;
    if (layout.is_entity(k)) {
      v.arity = kEntityArity;
      for (auto n : s.entity_labels) v.label_names.emplace_back(n);
    } else {
      v.arity = kRelationArity;
      for (auto n : s.relation_labels) v.label_names.emplace_back(n);
    }
    vars.push_back(std::move(v));
  }
  return vars;
}

/// Two <= rows per (ordered pair, typed relation) and one >= row per
/// unordered pair: m = 10 E(E-1) + E(E-1)/2.
inline ConstraintSystem make_constraints(const ERLayout& layout) {
  ConstraintSystem cs;
  for (int k = layout.entities(); k < layout.num_variables(); ++k) {
    const auto [src, tgt] = layout.endpoints(k);
    for (int r = 0; r < NoRel; ++r) {
      const auto tr = ERSchema::rule(r);
      cs.add_row({{{k, r, 1.0}, {src, tr->source, -1.0}}, 0.0, Sense::LessEqual});
      cs.add_row({{{k, r, 1.0}, {tgt, tr->target, -1.0}}, 0.0, Sense::LessEqual});
    }
  }
  for (int i = 0; i < layout.entities(); ++i) {
    for (int j = i + 1; j < layout.entities(); ++j) {
      cs.add_row({{{layout.relation_var(i, j), NoRel, 1.0}, {layout.relation_var(j, i), NoRel, 1.0}},
                  1.0,
                  Sense::GreaterEqual});
    }
  }
  return cs;
}

/// Validity checked directly from the type rules, without the row encoding.
inline bool satisfies_rules(const ERLayout& layout, const Assignment& a) {
  for (int k = layout.entities(); k < layout.num_variables(); ++k) {
    const int r = a.label(k);
    if (r == NoRel) continue;
    const auto [src, tgt] = layout.endpoints(k);
    const auto tr = ERSchema::rule(r);
    if (a.label(src) != tr->source || a.label(tgt) != tr->target) return false;
    if (a.label(layout.relation_var(tgt, src)) != NoRel) return false;
  }
  return true;
}

/// Speedup features: counts of (source, relation) and (relation, target)
/// label pairs and (source, relation, target) triples. A feature fires only
/// once all of its constituents are assigned.
class ERFeatureExtractor {
 public:
  static constexpr FeatureId kPairSrcBase = 0;                                    // 4 x 6
  static constexpr FeatureId kPairTgtBase = kEntityArity * kRelationArity;        // 6 x 4
  static constexpr FeatureId kTripleBase = 2 * kEntityArity * kRelationArity;     // 4 x 6 x 4
  static constexpr FeatureId kDimension = kTripleBase + kEntityArity * kRelationArity * kEntityArity;

  static constexpr FeatureId pair_src(int s, int r) { return kPairSrcBase + static_cast<FeatureId>(s * kRelationArity + r); }
  static constexpr FeatureId pair_tgt(int r, int t) { return kPairTgtBase + static_cast<FeatureId>(r * kEntityArity + t); }
  static constexpr FeatureId triple(int s, int r, int t) {
    return kTripleBase + static_cast<FeatureId>((s * kRelationArity + r) * kEntityArity + t);
  }

  std::string schema() const { return "er-v1"; }
  FeatureId dimension() const { return kDimension; }

  std::string feature_name(FeatureId id) const {
    const auto& s = er::schema();
    auto ent = [&](int e) { return std::string(s.entity_labels[static_cast<std::size_t>(e)]); };
    auto rel = [&](int r) { return std::string(s.relation_labels[static_cast<std::size_t>(r)]); };
    if (id < kPairTgtBase) {
      const int v = static_cast<int>(id - kPairSrcBase);
      return "pair:src=" + ent(v / kRelationArity) + "|rel=" + rel(v % kRelationArity);
    }
    if (id < kTripleBase) {
      const int v = static_cast<int>(id - kPairTgtBase);
      return "pair:rel=" + rel(v / kEntityArity) + "|tgt=" + ent(v % kEntityArity);
    }
    if (id < kDimension) {
      const int v = static_cast<int>(id - kTripleBase);
      const int t = v % kEntityArity;
      const int r = (v / kEntityArity) % kRelationArity;
      const int src = v / (kEntityArity * kRelationArity);
      return "triple:src=" + ent(src) + "|rel=" + rel(r) + "|tgt=" + ent(t);
    }
    throw std::out_of_range("feature id outside the er-v1 space");
  }

  std::optional<FeatureId> feature_id(const std::string& name) const {
    for (FeatureId id = 0; id < kDimension; ++id) {
      if (feature_name(id) == name) return id;
    }
    return std::nullopt;
  }

  SparseVector extract(const ProblemInstance& instance, const Assignment& a) const {
    const auto layout = ERLayout::from_num_variables(instance.num_variables());
    SparseVector phi;
    for (int k = layout.entities(); k < layout.num_variables(); ++k) {
      if (a.is_assigned(k)) add_relation_features(phi, layout, a, k, a.label(k));
    }
    return phi;
  }

  SparseVector delta(const ProblemInstance& instance, const Assignment& a, int k, int label) const {
    const auto layout = ERLayout::from_num_variables(instance.num_variables());
    SparseVector d;
    if (layout.is_relation(k)) {
      add_relation_features(d, layout, a, k, label);
      return d;
    }
    // Entity k becomes `label`: every assigned incident relation gains the
    // features that now have all constituents.
    for (int rel_var : layout.incident_relations(k)) {
      if (!a.is_assigned(rel_var)) continue;
      const int r = a.label(rel_var);
      const auto [src, tgt] = layout.endpoints(rel_var);
      const int other = (src == k) ? tgt : src;
      const bool other_assigned = a.is_assigned(other);
      if (src == k) {
        d.add(pair_src(label, r), 1.0);
        if (other_assigned) d.add(triple(label, r, a.label(other)), 1.0);
      } else {
        d.add(pair_tgt(r, label), 1.0);
        if (other_assigned) d.add(triple(a.label(other), r, label), 1.0);
      }
    }
    return d;
  }

 private:
  static void add_relation_features(SparseVector& phi, const ERLayout& layout, const Assignment& a, int k, int r) {
    const auto [src, tgt] = layout.endpoints(k);
    const bool has_src = a.is_assigned(src);
    const bool has_tgt = a.is_assigned(tgt);
    if (has_src) phi.add(pair_src(a.label(src), r), 1.0);
    if (has_tgt) phi.add(pair_tgt(r, a.label(tgt)), 1.0);
    if (has_src && has_tgt) phi.add(triple(a.label(src), r, a.label(tgt)), 1.0);
  }
};

/// Cost-generation knobs. Costs are -(affinity to the gold label) plus
/// Gaussian noise, with targeted perturbations that make the per-variable
/// argmin structurally invalid.
struct DifficultyProfile {
  std::string name;
  double entity_margin = 1.0;      // gold entity label affinity
  double relation_margin = 1.0;    // gold relation label affinity
  double noise = 0.3;              // stddev of label noise
  double relation_rate = 0.5;      // chance an entity pair carries a typed gold relation
  double entity_tension = 0.0;     // chance a related entity's argmin flips to a clashing type
  double relation_tension = 0.0;   // chance an untyped relation's argmin becomes a clashing typed label
  double target_greedy_validity = 1.0;  // calibration target for unconstrained greedy
};

inline DifficultyProfile easy_profile() {
  return {"easy", 1.5, 1.5, 0.2, 0.4, 0.05, 0.05, 0.8};
}

inline DifficultyProfile hard_profile() {
  return {"hard", 1.2, 2.0, 0.25, 0.5, 0.05, 0.4, 0.5};
}

inline DifficultyProfile profile_by_name(const std::string& name) {
  if (name == "easy") return easy_profile();
  if (name == "hard") return hard_profile();
  throw std::invalid_argument("unknown difficulty profile '" + name + "'");
}

namespace detail {

inline int draw_entity(std::mt19937_64& rng) {
  std::discrete_distribution<int> d({0.35, 0.3, 0.2, 0.15});
  return d(rng);
}

}  // namespace detail

/// Random gold structure satisfying every rule.
inline Assignment sample_gold(const ERLayout& layout, const DifficultyProfile& profile, std::mt19937_64& rng) {
  Assignment gold(static_cast<std::size_t>(layout.num_variables()));
  for (int e = 0; e < layout.entities(); ++e) gold.assign(e, detail::draw_entity(rng));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < layout.entities(); ++i) {
    for (int j = i + 1; j < layout.entities(); ++j) {
      gold.assign(layout.relation_var(i, j), NoRel);
      gold.assign(layout.relation_var(j, i), NoRel);
      std::vector<std::pair<int, int>> options;  // (source, relation)
      if (auto r = ERSchema::allowed_relation(gold.label(i), gold.label(j))) options.emplace_back(i, *r);
      if (auto r = ERSchema::allowed_relation(gold.label(j), gold.label(i))) options.emplace_back(j, *r);
      if (options.empty() || u(rng) >= profile.relation_rate) continue;
      const auto [src, r] = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
      gold.assign(src == i ? layout.relation_var(i, j) : layout.relation_var(j, i), r);
    }
  }
  return gold;
}

/// One synthetic instance. Deterministic in (E, seed, profile).
inline ProblemInstance build_instance(int entities, std::uint64_t seed, const DifficultyProfile& profile) {
  if (entities < 2 || entities > 6) throw std::invalid_argument("build_instance supports 2 <= E <= 6");
  const ERLayout layout(entities);
  std::mt19937_64 rng(seed);
  const Assignment gold = sample_gold(layout, profile, rng);

  std::normal_distribution<double> noise(0.0, profile.noise);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> costs(static_cast<std::size_t>(layout.num_variables()));
  for (int k = 0; k < layout.num_variables(); ++k) {
    const int arity = layout.is_entity(k) ? kEntityArity : kRelationArity;
    const double margin = layout.is_entity(k) ? profile.entity_margin : profile.relation_margin;
    auto& c = costs[static_cast<std::size_t>(k)];
    c.resize(static_cast<std::size_t>(arity));
    for (int i = 0; i < arity; ++i) c[static_cast<std::size_t>(i)] = noise(rng) - (i == gold.label(k) ? margin : 0.0);
  }

  auto make_cheapest = [&](int k, int label) {
    auto& c = costs[static_cast<std::size_t>(k)];
    double lo = c[0];
    for (double v : c) lo = std::min(lo, v);
    c[static_cast<std::size_t>(label)] = lo - 0.05 - 0.3 * u(rng);
  };

  // Entity tension: an endpoint of a typed gold relation prefers a type that
  // breaks the rule.
  for (int k = entities; k < layout.num_variables(); ++k) {
    const int r = gold.label(k);
    if (r == NoRel || u(rng) >= profile.entity_tension) continue;
    const auto [src, tgt] = layout.endpoints(k);
    const int victim = (u(rng) < 0.5) ? src : tgt;
    int wrong = std::uniform_int_distribution<int>(0, kEntityArity - 2)(rng);
    if (wrong >= gold.label(victim)) ++wrong;
    make_cheapest(victim, wrong);
  }
  // Relation tension: an untyped relation prefers a typed label whose rule
  // clashes with the gold entity types.
  for (int k = entities; k < layout.num_variables(); ++k) {
    if (gold.label(k) != NoRel || u(rng) >= profile.relation_tension) continue;
    const auto [src, tgt] = layout.endpoints(k);
    std::vector<int> clashing;
    for (int r = 0; r < NoRel; ++r) {
      const auto tr = ERSchema::rule(r);
      if (tr->source != gold.label(src) || tr->target != gold.label(tgt)) clashing.push_back(r);
    }
    make_cheapest(k, clashing[std::uniform_int_distribution<std::size_t>(0, clashing.size() - 1)(rng)]);
  }

  return ProblemInstance(make_variables(layout), make_constraints(layout), CostOracle::from_table(std::move(costs)),
                         gold);
}

/// Seed for the index-th instance of a dataset.
inline std::uint64_t instance_seed(std::uint64_t dataset_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(dataset_seed), static_cast<std::uint32_t>(dataset_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint64_t, 1> out{};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out[0];
}

/// Dataset whose entity counts cycle through `entity_counts`.
inline std::vector<ProblemInstance> build_dataset(std::size_t count, const std::vector<int>& entity_counts,
                                                  std::uint64_t seed, const DifficultyProfile& profile) {
  if (entity_counts.empty()) throw std::invalid_argument("entity_counts must be non-empty");
  std::vector<ProblemInstance> out;
  out.reserve(count);
  std::mt19937_64 pick(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t n = 0; n < count; ++n) {
    const int E = entity_counts[std::uniform_int_distribution<std::size_t>(0, entity_counts.size() - 1)(pick)];
    out.push_back(build_instance(E, instance_seed(seed, n), profile));
  }
  return out;
}

}  // namespace speedup::er
