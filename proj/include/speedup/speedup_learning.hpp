#pragma once

// Online training of the speedup heuristic by imitating an exact solver, and
// measurement of the constants in the perceptron-style mistake bound
//   updates <= (R_phi^2 + 2 R_g) / gamma^2.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "speedup/errors.hpp"
#include "speedup/ilp_core.hpp"
#include "speedup/model.hpp"
#include "speedup/search.hpp"
#include "speedup/sparse_vector.hpp"

namespace speedup {

/// A node is y-good iff every assigned pair agrees with the reference.
struct GoodnessJudge {
  Assignment reference;

  bool is_good(const SearchNode& v) const {
    for (const auto& [k, i] : v.path) {
      if (reference.label(k) != i) return false;
    }
    return true;
  }
};

inline bool is_y_good_beam(const Beam& beam, const GoodnessJudge& judge) {
  for (const auto& v : beam.nodes) {
    if (judge.is_good(v)) return true;
  }
  return false;
}

/// Relabels every assigned variable of `node` to the reference label. The
/// set of assigned variables (and their order) is unchanged; phi is
/// re-extracted and g is left deferred.
template <FeatureExtractor Extractor>
SearchNode set_good(const SearchNode& node, const Assignment& reference, const ProblemInstance& instance,
                    const Extractor& extractor) {
  if (!reference.complete()) throw IncompleteAssignment();
  SearchNode out = node;
  for (auto& [k, i] : out.path) {
    i = reference.label(k);
    out.assigned.assign(k, i);
  }
  out.phi = extractor.extract(instance, out.assigned);
  out.g_partial = 0.0;
  out.resolved_prefix = 0;
  return out;
}

/// A same-level (y-good, y-bad) node pair seen during training.
struct RecordedPair {
  int level = 0;
  SparseVector phi_good;
  SparseVector phi_bad;
  double g_good = 0.0;
  double g_bad = 0.0;
};

struct BoundDiagnostics {
  double r_phi = 0.0;
  double r_g = 0.0;
  double gamma = 0.0;
  double bound = std::numeric_limits<double>::infinity();  // finite iff gamma > 0
  std::size_t margin_pairs_examined = 0;
};

/// R_phi and R_g are maximal pairwise differences over every node appearing
/// in the recorded pairs (across levels); gamma is the minimum of
/// direction . (phi_good - phi_bad) over the recorded pairs.
inline BoundDiagnostics measure_bound_constants(std::span<const RecordedPair> pairs, const SparseVector& direction) {
  if (pairs.empty()) throw NoPairsRecorded();
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw std::invalid_argument("direction must have unit norm");

  BoundDiagnostics d;
  std::vector<SparseVector> phis;
  double g_lo = std::numeric_limits<double>::infinity();
  double g_hi = -g_lo;
  d.gamma = std::numeric_limits<double>::infinity();
  auto remember = [&](const SparseVector& phi) {
    for (const auto& seen : phis) {
      if (seen == phi) return;
    }
    phis.push_back(phi);
  };
  for (const auto& p : pairs) {
    remember(p.phi_good);
    remember(p.phi_bad);
    g_lo = std::min({g_lo, p.g_good, p.g_bad});
    g_hi = std::max({g_hi, p.g_good, p.g_bad});
    d.gamma = std::min(d.gamma, direction.dot(p.phi_good) - direction.dot(p.phi_bad));
  }
  for (std::size_t a = 0; a < phis.size(); ++a) {
    for (std::size_t b = a + 1; b < phis.size(); ++b) d.r_phi = std::max(d.r_phi, (phis[a] - phis[b]).norm());
  }
  d.r_g = g_hi - g_lo;
  d.margin_pairs_examined = pairs.size();
  if (d.gamma > 0.0) d.bound = (d.r_phi * d.r_phi + 2.0 * d.r_g) / (d.gamma * d.gamma);
  return d;
}

/// w <- w + target - subtract, the unscaled perceptron step.
using UpdateRule = std::function<void(SparseVector& w, const SparseVector& target, const SparseVector& subtract)>;

inline void perceptron_update(SparseVector& w, const SparseVector& target, const SparseVector& subtract) {
  w += target;
  w -= subtract;
}

using Solver = std::function<Assignment(const ProblemInstance&)>;

inline Solver exact_solver(long budget = kDefaultSolverBudget) {
  return [budget](const ProblemInstance& inst) { return solve_exact(inst, budget).assignment; };
}

struct TrainOptions {
  int width = 1;
  int epochs = 1;
  bool stop_when_converged = true;   // later epochs are no-ops after a clean one
  std::size_t pair_capacity = 10'000;
  std::uint64_t reservoir_seed = 17;
  bool record_updates = false;
  UpdateRule update;                 // empty: perceptron_update
};

struct UpdateEvent {
  int epoch = 0;
  std::size_t example = 0;
  int line = 0;  // 11: beam lost every y-good node; 14: wrong goal
  SparseVector expected_delta;
  SparseVector actual_delta;
};

struct TrainResult {
  SpeedupModel model;
  std::vector<RecordedPair> pairs;
  std::vector<UpdateEvent> updates;         // filled when record_updates
  std::vector<std::size_t> skipped;         // examples the solver failed on
  std::vector<std::string> log;
  bool converged = false;                   // some epoch made no updates
  std::size_t pairs_seen = 0;
};

/// Algorithm: for every epoch and example, search under p(v) = g(v) - w.phi(v)
/// while the beam is y-good and the best node is not a goal; then apply at
/// most one update. The reference comes from `solve`, never from gold.
///
/// Recorded pairs are the (SetGood(best), v) pairs entering each update, i.e.
/// the pairs on which the margin argument acts.
template <FeatureExtractor Extractor>
TrainResult train(std::span<const ProblemInstance> examples, const Extractor& extractor, const TrainOptions& options,
                  const Solver& solve = exact_solver(), std::string schema = {}) {
  if (options.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (options.width < 1) throw std::invalid_argument("beam width must be >= 1");
  TrainResult result;
  result.model.schema = std::move(schema);
  const UpdateRule update = options.update ? options.update : UpdateRule(perceptron_update);
  std::mt19937_64 reservoir_rng(options.reservoir_seed);

  auto record = [&](RecordedPair pair) {
    ++result.pairs_seen;
    if (result.pairs.size() < options.pair_capacity) {
      result.pairs.push_back(std::move(pair));
      return;
    }
    std::uniform_int_distribution<std::size_t> pick(0, result.pairs_seen - 1);
    const std::size_t slot = pick(reservoir_rng);
    if (slot < options.pair_capacity) result.pairs[slot] = std::move(pair);
  };

  std::vector<std::optional<Assignment>> references(examples.size());
  for (std::size_t n = 0; n < examples.size(); ++n) {
    try {
      references[n] = solve(examples[n]);
    } catch (const Error& e) {
      result.skipped.push_back(n);
      result.log.push_back("example " + std::to_string(n) + " skipped: " + e.what());
    }
  }

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    long epoch_updates = 0;
    for (std::size_t n = 0; n < examples.size(); ++n) {
      if (!references[n]) continue;
      const ProblemInstance& inst = examples[n];
      const GoodnessJudge judge{*references[n]};
      const auto ordering = index_ordering(inst);
      const auto config = PriorityConfig::full(result.model);

      Beam beam{{SearchNode::initial(inst)}, options.width};
      while (is_y_good_beam(beam, judge) && beam.best().depth() < inst.num_variables()) {
        auto candidates = breadth_expand(inst, beam, ordering, extractor);
        beam = filter(std::move(candidates), config, options.width, inst).beam;
      }

      const bool beam_good = is_y_good_beam(beam, judge);
      if (beam_good && judge.is_good(beam.best())) continue;

      SearchNode star = set_good(beam.best(), judge.reference, inst, extractor);
      star.resolve_g(inst);
      SparseVector subtract;
      int line = 0;
      if (!beam_good) {
        line = 11;
        const double inv = 1.0 / static_cast<double>(beam.size());
        for (auto& v : beam.nodes) {
          subtract.axpy(inv, v.phi);
          record({v.depth(), star.phi, v.phi, star.g_partial, v.resolve_g(inst)});
        }
      } else {
        line = 14;
        SearchNode& top = beam.nodes.front();
        subtract = top.phi;
        record({top.depth(), star.phi, top.phi, star.g_partial, top.resolve_g(inst)});
      }

      const SparseVector before = result.model.weights;
      update(result.model.weights, star.phi, subtract);
      ++epoch_updates;
      if (options.record_updates) {
        result.updates.push_back({epoch, n, line, star.phi - subtract, result.model.weights - before});
      }
    }
    result.model.epoch_log.push_back(epoch_updates);
    result.model.update_count += epoch_updates;
    if (epoch_updates == 0) {
      result.converged = true;
      if (options.stop_when_converged) break;
    }
  }
  return result;
}

/// Unit vector along the model weights (zero vector stays zero).
inline SparseVector unit_direction(const SparseVector& w) {
  const double n = w.norm();
  SparseVector out;
  if (n == 0.0) return out;
  out.axpy(1.0 / n, w);
  return out;
}

}  // namespace speedup
