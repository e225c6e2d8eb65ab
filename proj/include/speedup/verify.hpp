#pragma once

// Property suites shared by the command-line `verify` command and the
// acceptance tests. Each suite self-generates its fixtures from a seed and
// reports the first counterexample it finds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "speedup/er_planted.hpp"
#include "speedup/er_task.hpp"
#include "speedup/instance_io.hpp"
#include "speedup/lagrangian.hpp"
#include "speedup/oracles.hpp"
#include "speedup/search.hpp"
#include "speedup/speedup_learning.hpp"

namespace speedup::verify {

struct SuiteReport {
  explicit SuiteReport(std::string suite) : name(std::move(suite)) {}

  std::string name;
  bool passed = true;
  long checked = 0;
  long skipped = 0;
  std::string counterexample;                         // first failure, empty when passed
  std::vector<std::pair<std::string, double>> stats;  // suite-specific figures

  void fail(std::string detail) {
    if (passed) counterexample = std::move(detail);
    passed = false;
  }
  void stat(std::string key, double value) { stats.emplace_back(std::move(key), value); }
};

inline std::string dump_instance(const ProblemInstance& instance) {
  std::ostringstream out;
  write_instance(out, instance);
  return out.str();
}

inline std::string labels_of(const Assignment& a) {
  std::string s;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k) s += ' ';
    s += std::to_string(a.label(static_cast<int>(k)));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Exact solver against exhaustive enumeration.

inline SuiteReport solver_equivalence(std::span<const ProblemInstance> instances) {
  SuiteReport r{"solver-equivalence"};
  for (std::size_t n = 0; n < instances.size(); ++n) {
    const auto& inst = instances[n];
    const auto reference = oracle::brute_force_minimum(inst);
    ++r.checked;
    if (!reference.argmin) {
      try {
        (void)solve_exact(inst);
        r.fail("instance " + std::to_string(n) + ": solver found a solution where enumeration found none\n" +
               dump_instance(inst));
      } catch (const Infeasible&) {
      }
      continue;
    }
    const auto solved = solve_exact(inst);
    if (solved.objective != reference.minimum || solved.assignment != *reference.argmin) {
      r.fail("instance " + std::to_string(n) + ": solver " + format_double(solved.objective) + " [" +
             labels_of(solved.assignment) + "] vs enumeration " + format_double(reference.minimum) + " [" +
             labels_of(*reference.argmin) + "]\n" + dump_instance(inst));
    }
  }
  return r;
}

inline std::vector<ProblemInstance> solver_fixtures(std::size_t count, std::uint64_t seed) {
  return er::build_dataset(count, {2, 3}, seed, er::hard_profile());
}

// ---------------------------------------------------------------------------
// Heuristic-only and full-priority beams agree as sets whenever the
// heuristic gap exceeds the path-cost gap.

enum class SetCheck { Equal, Different, PreconditionUnmet };

/// Candidates are single-step children of one variable of `instance`.
inline SetCheck check_beam_set_equality(const std::vector<SearchNode>& candidates, const SpeedupModel& model,
                                        int width, const ProblemInstance& instance) {
  const double big_delta = heuristic_gap(candidates, &model, width);
  const double small_delta = path_cost_gap(candidates, instance);
  if (!(big_delta > small_delta)) return SetCheck::PreconditionUnmet;
  auto by_h = filter(candidates, PriorityConfig::heuristic_only(model), width, instance).beam;
  auto by_p = filter(candidates, PriorityConfig::full(model), width, instance).beam;
  auto key = [](const Beam& b) {
    std::vector<std::vector<PathStep>> paths;
    for (const auto& v : b.nodes) paths.push_back(v.path);
    std::sort(paths.begin(), paths.end());
    return paths;
  };
  return key(by_h) == key(by_p) ? SetCheck::Equal : SetCheck::Different;
}

struct CandidateFixture {
  ProblemInstance instance;
  std::vector<SearchNode> candidates;
  SpeedupModel model;
  int width = 1;
};

/// One variable with n labels and random costs; each candidate assigns it a
/// different label and carries a random feature vector.
inline CandidateFixture random_candidate_set(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_dist(2, 12);
  std::uniform_int_distribution<int> width_dist(1, 3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> scale_dist(0.01, 2.0);
  const int n = n_dist(rng);
  const double cost_scale = scale_dist(rng);
  constexpr int kDim = 6;

  std::vector<double> costs(static_cast<std::size_t>(n));
  for (auto& c : costs) c = cost_scale * unit(rng);
  VariableSpec var{n, {}};
  for (int i = 0; i < n; ++i) var.label_names.push_back("l" + std::to_string(i));
  CandidateFixture f{ProblemInstance({var}, ConstraintSystem{}, CostOracle::from_table({costs})), {}, {},
                     width_dist(rng)};
  for (FeatureId d = 0; d < kDim; ++d) f.model.weights.set(d, 3.0 * unit(rng));
  const SearchNode root = SearchNode::initial(f.instance);
  for (int i = 0; i < n; ++i) {
    SparseVector phi;
    for (FeatureId d = 0; d < kDim; ++d) phi.set(d, std::round(4.0 * unit(rng)));
    f.candidates.push_back(root.child(0, i, phi));
  }
  return f;
}

inline SuiteReport beam_set_equality(long sets, std::uint64_t seed) {
  SuiteReport r{"beam-set-equality"};
  std::mt19937_64 rng(seed);
  for (long s = 0; s < sets; ++s) {
    auto f = random_candidate_set(rng);
    const double fast = heuristic_gap(f.candidates, &f.model, f.width);
    const double slow = oracle::naive_heuristic_gap(f.candidates, f.model, f.width);
    if (!(fast == slow || std::abs(fast - slow) <= 1e-12)) {
      r.fail("set " + std::to_string(s) + ": heuristic gap " + format_double(fast) + " vs sorted " +
             format_double(slow));
    }
    switch (check_beam_set_equality(f.candidates, f.model, f.width, f.instance)) {
      case SetCheck::PreconditionUnmet: ++r.skipped; break;
      case SetCheck::Equal: ++r.checked; break;
      case SetCheck::Different:
        ++r.checked;
        r.fail("set " + std::to_string(s) + " (width " + std::to_string(f.width) +
               "): heuristic-only beam differs from full-priority beam\n" + dump_instance(f.instance));
        break;
    }
  }
  r.stat("sets_generated", static_cast<double>(sets));
  return r;
}

// ---------------------------------------------------------------------------
// Weak duality everywhere; exactness of greedy search under the optimal
// heuristic on zero-gap instances.

struct DualSuiteOptions {
  int max_iters = 2000;
  double tol = 1e-9;
  double gap_tol = 1e-6;
  double duality_slack = 1e-9;
  int random_multipliers = 5;  // extra sign-feasible u checked per instance
};

inline SuiteReport lagrangian_exactness(std::span<const ProblemInstance> instances, std::uint64_t seed,
                                        const DualSuiteOptions& options = {}) {
  SuiteReport r{"lagrangian-exactness"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.0, 2.0);
  long zero_gap = 0;
  long exact = 0;
  for (std::size_t n = 0; n < instances.size(); ++n) {
    const auto& inst = instances[n];
    const double primal = solve_exact(inst).objective;
    const auto state = solve_dual(inst, options.max_iters, options.tol);
    ++r.checked;
    auto check_weak = [&](std::span<const double> u, const std::string& which) {
      const double theta = dual_minimizer(inst, u).value;
      if (theta > primal + options.duality_slack) {
        r.fail("instance " + std::to_string(n) + ": " + which + " dual value " + format_double(theta) +
               " exceeds primal optimum " + format_double(primal) + "\n" + dump_instance(inst));
      }
    };
    check_weak(state.u, "subgradient");
    for (int t = 0; t < options.random_multipliers; ++t) {
      std::vector<double> u(inst.constraints().size());
      for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] = project_multiplier(inst.constraints().row(j).sense, (mag(rng) - 1.0) * 2.0);
      }
      check_weak(u, "random");
    }
    if (std::abs(primal - state.dual_value) < options.gap_tol) {
      ++zero_gap;
      const auto greedy = greedy_with_optimal_heuristic(inst, state);
      const bool ok = check_feasible(inst, greedy.assignment) &&
                      std::abs(objective_of(inst, greedy.assignment) - primal) <= 1e-9 * (1.0 + std::abs(primal));
      if (ok) {
        ++exact;
      } else {
        r.fail("instance " + std::to_string(n) + ": zero-gap greedy returned [" + labels_of(greedy.assignment) +
               "] with objective " + format_double(objective_of(inst, greedy.assignment)) + ", optimum " +
               format_double(primal) + "\n" + dump_instance(inst));
      }
    }
  }
  r.stat("zero_gap_fraction", instances.empty() ? 0.0 : static_cast<double>(zero_gap) / instances.size());
  r.stat("zero_gap_instances", static_cast<double>(zero_gap));
  r.stat("zero_gap_exact", static_cast<double>(exact));
  if (zero_gap == 0) r.fail("no zero-gap instance in the sample");
  return r;
}

// ---------------------------------------------------------------------------
// Mistake bound on a certified separable set.

struct MistakeBoundOptions {
  std::size_t count = 200;
  int entities = 2;
  double margin_target = 0.5;
  int max_epochs = 50;
  std::uint64_t seed = 2024;
  UpdateRule update;  // empty: the perceptron step
};

inline SuiteReport mistake_bound(const MistakeBoundOptions& options) {
  SuiteReport r{"mistake-bound"};
  const auto set = er::plant_separable_set(options.count, options.entities, options.margin_target, options.seed);
  const er::ERFeatureExtractor extractor;
  TrainOptions train_opts;
  train_opts.width = 1;
  train_opts.epochs = options.max_epochs;
  train_opts.update = options.update;
  const auto trained = train(std::span<const ProblemInstance>(set.instances), extractor, train_opts);
  r.checked = static_cast<long>(set.instances.size());
  r.stat("certified_margin", set.certified_margin);
  r.stat("updates", static_cast<double>(trained.model.update_count));
  r.stat("epochs", static_cast<double>(trained.model.epoch_log.size()));
  if (trained.pairs.empty()) {
    if (!trained.converged) r.fail("no pairs recorded and no clean epoch");
    r.stat("bound", 0.0);
    return r;
  }
  const auto d = measure_bound_constants(trained.pairs, set.direction);
  r.stat("r_phi", d.r_phi);
  r.stat("r_g", d.r_g);
  r.stat("gamma", d.gamma);
  r.stat("bound", d.bound);
  std::ostringstream detail;
  detail << "updates " << trained.model.update_count << ", bound " << format_double(d.bound) << " (R_phi "
         << format_double(d.r_phi) << ", R_g " << format_double(d.r_g) << ", gamma " << format_double(d.gamma)
         << "), epochs";
  for (long u : trained.model.epoch_log) detail << ' ' << u;
  if (!(static_cast<double>(trained.model.update_count) <= d.bound)) {
    r.fail("update count exceeds the mistake bound: " + detail.str());
  } else if (!trained.converged) {
    r.fail("no zero-update epoch within " + std::to_string(options.max_epochs) + " epochs: " + detail.str());
  }
  return r;
}

}  // namespace speedup::verify
