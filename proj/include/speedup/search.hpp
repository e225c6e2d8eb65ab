#pragma once

// Inference as beam search over partial assignments.
//
// A node is a set of (variable, label) pairs built along a fixed variable
// ordering, so every node in a beam sits at the same depth. Path costs are
// resolved lazily: a node remembers how much of its path has been summed and
// resolves the rest only when a ranking actually needs g.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "speedup/errors.hpp"
#include "speedup/ilp_core.hpp"
#include "speedup/model.hpp"
#include "speedup/sparse_vector.hpp"

namespace speedup {

/// phi(v) and its incremental form. `delta(inst, a, k, i)` returns
/// phi(a + {(k, i)}) - phi(a) for an unassigned k.
template <class E>
concept FeatureExtractor = requires(const E& e, const ProblemInstance& inst, const Assignment& a, int k, int i) {
  { e.extract(inst, a) } -> std::same_as<SparseVector>;
  { e.delta(inst, a, k, i) } -> std::same_as<SparseVector>;
};

/// Extractor with an empty feature space; h is identically zero.
struct NoFeatures {
  SparseVector extract(const ProblemInstance&, const Assignment&) const { return {}; }
  SparseVector delta(const ProblemInstance&, const Assignment&, int, int) const { return {}; }
};

using PathStep = std::pair<int, int>;

struct SearchNode {
  Assignment assigned;
  std::vector<PathStep> path;  // pairs in the order they were assigned
  SparseVector phi;
  double g_partial = 0.0;         // sum over path[0 .. resolved_prefix)
  std::size_t resolved_prefix = 0;

  static SearchNode initial(const ProblemInstance& instance) {
    SearchNode n;
    n.assigned = Assignment(static_cast<std::size_t>(instance.num_variables()));
    return n;
  }

  int depth() const noexcept { return static_cast<int>(path.size()); }
  bool g_resolved() const noexcept { return resolved_prefix == path.size(); }
  std::optional<double> g() const {
    return g_resolved() ? std::optional<double>(g_partial) : std::nullopt;
  }

  /// Resolves the deferred tail of the path through the cost oracle.
  double resolve_g(const ProblemInstance& instance) {
    for (; resolved_prefix < path.size(); ++resolved_prefix) {
      const auto& [k, i] = path[resolved_prefix];
      g_partial += instance.cost(k, i);
    }
    return g_partial;
  }

  SearchNode child(int k, int label, SparseVector phi_delta) const {
    SearchNode c = *this;
    c.assigned.assign(k, label);
    c.path.emplace_back(k, label);
    c.phi += phi_delta;
    return c;
  }
};

/// Lexicographic order on assignment paths; the global tie-breaker.
inline bool path_less(const SearchNode& a, const SearchNode& b) { return a.path < b.path; }

struct Beam {
  std::vector<SearchNode> nodes;  // best first
  int width = 1;

  const SearchNode& best() const { return nodes.front(); }
  bool empty() const noexcept { return nodes.empty(); }
  std::size_t size() const noexcept { return nodes.size(); }
};

enum class PriorityMode { CostOnly, HeuristicOnly, Full, Gated };

inline const char* mode_name(PriorityMode m) {
  switch (m) {
    case PriorityMode::CostOnly: return "cost_only";
    case PriorityMode::HeuristicOnly: return "heuristic_only";
    case PriorityMode::Full: return "full";
    case PriorityMode::Gated: return "gated";
  }
  return "?";
}

struct PriorityConfig {
  const SpeedupModel* model = nullptr;  // null means w = 0
  std::optional<double> theta;
  PriorityMode mode = PriorityMode::Full;

  static PriorityConfig cost_only() { return {nullptr, std::nullopt, PriorityMode::CostOnly}; }
  static PriorityConfig full(const SpeedupModel& m) { return {&m, std::nullopt, PriorityMode::Full}; }
  static PriorityConfig heuristic_only(const SpeedupModel& m) {
    return {&m, std::nullopt, PriorityMode::HeuristicOnly};
  }
  static PriorityConfig gated(const SpeedupModel& m, double theta) { return {&m, theta, PriorityMode::Gated}; }

  void validate() const {
    if (mode == PriorityMode::Gated && (!theta || *theta < 0.0)) {
      throw std::invalid_argument("gated priority requires theta >= 0");
    }
  }

  double h(const SearchNode& v) const { return model ? model->heuristic(v.phi) : 0.0; }
};

inline constexpr double kInfiniteGap = std::numeric_limits<double>::infinity();

/// Default ordering: variables in index order.
inline std::vector<int> index_ordering(const ProblemInstance& instance) {
  std::vector<int> order(static_cast<std::size_t>(instance.num_variables()));
  std::iota(order.begin(), order.end(), 0);
  return order;
}

template <FeatureExtractor Extractor>
std::vector<SearchNode> breadth_expand(const ProblemInstance& instance, const Beam& beam,
                                       std::span<const int> ordering, const Extractor& extractor) {
  if (beam.empty()) throw std::invalid_argument("cannot expand an empty beam");
  const int depth = beam.best().depth();
  for (const auto& n : beam.nodes) {
    if (n.depth() != depth) throw DepthMismatch();
  }
  if (depth >= static_cast<int>(ordering.size())) throw std::invalid_argument("beam is already at goal depth");
  const int k = ordering[static_cast<std::size_t>(depth)];
  std::vector<SearchNode> out;
  out.reserve(beam.size() * static_cast<std::size_t>(instance.arity(k)));
  for (const auto& parent : beam.nodes) {
    for (int i = 0; i < instance.arity(k); ++i) {
      out.push_back(parent.child(k, i, extractor.delta(instance, parent.assigned, k, i)));
    }
  }
  return out;
}

/// h(v_{b+1}) - h(v_b) with candidates sorted by h ascending; +inf when there
/// are no more than b candidates.
inline double heuristic_gap(std::span<const SearchNode> candidates, const SpeedupModel* model, int width) {
  if (candidates.size() <= static_cast<std::size_t>(width)) return kInfiniteGap;
  std::vector<double> h;
  h.reserve(candidates.size());
  for (const auto& v : candidates) h.push_back(model ? model->heuristic(v.phi) : 0.0);
  const auto b = static_cast<std::size_t>(width);
  std::nth_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(b), h.end());
  const double next = h[b];
  const double last_in = *std::max_element(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(b));
  return next - last_in;
}

/// max g - min g over the candidates. Forces resolution; diagnostic only.
inline double path_cost_gap(std::span<const SearchNode> candidates, const ProblemInstance& instance) {
  if (candidates.empty()) return 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& v : candidates) {
    SearchNode copy = v;
    const double g = copy.resolve_g(instance);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  return hi - lo;
}

struct FilterResult {
  Beam beam;
  double delta = kInfiniteGap;  // heuristic gap; only computed in gated mode
  bool gate_taken = false;      // true when the beam was picked by h alone
};

namespace detail {

template <class Key>
void rank(std::vector<SearchNode>& nodes, Key key) {
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) keyed.emplace_back(key(nodes[n]), n);
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return path_less(nodes[a.second], nodes[b.second]);
  });
  std::vector<SearchNode> sorted;
  sorted.reserve(nodes.size());
  for (const auto& [_, n] : keyed) sorted.push_back(std::move(nodes[n]));
  nodes = std::move(sorted);
}

}  // namespace detail

/// Keeps the top `width` candidates under the configured priority (smaller
/// is better, ties broken by lexicographic path).
inline FilterResult filter(std::vector<SearchNode> candidates, const PriorityConfig& config, int width,
                           const ProblemInstance& instance) {
  if (candidates.empty()) throw std::invalid_argument("filter needs at least one candidate");
  if (width < 1) throw std::invalid_argument("beam width must be >= 1");
  config.validate();

  FilterResult result;
  result.beam.width = width;
  auto resolve_all = [&] {
    for (auto& v : candidates) v.resolve_g(instance);
  };
  auto by_g = [](const SearchNode& v) { return v.g_partial; };
  auto by_h = [&](const SearchNode& v) { return config.h(v); };
  auto by_p = [&](const SearchNode& v) { return v.g_partial + config.h(v); };

  switch (config.mode) {
    case PriorityMode::CostOnly:
      resolve_all();
      detail::rank(candidates, by_g);
      break;
    case PriorityMode::HeuristicOnly:
      detail::rank(candidates, by_h);
      result.gate_taken = true;
      break;
    case PriorityMode::Full:
      resolve_all();
      detail::rank(candidates, by_p);
      break;
    case PriorityMode::Gated:
      result.delta = heuristic_gap(candidates, config.model, width);
      if (result.delta > *config.theta) {
        detail::rank(candidates, by_h);
        result.gate_taken = true;
      } else {
        resolve_all();
        detail::rank(candidates, by_p);
      }
      break;
  }
  if (candidates.size() > static_cast<std::size_t>(width)) candidates.resize(static_cast<std::size_t>(width));
  result.beam.nodes = std::move(candidates);
  return result;
}

struct TraceRecord {
  int step = 0;
  double delta = kInfiniteGap;
  bool gate_taken = false;
  std::size_t candidates = 0;
  std::size_t beam = 0;
  long oracle_calls = 0;
};

/// Line-delimited trace export, one tab-separated record per step after a
/// header line.
inline void write_trace(std::ostream& out, std::span<const TraceRecord> trace) {
  out << "step\tdelta\tgate_taken\tcandidates\tbeam\toracle_calls\n";
  for (const auto& r : trace) {
    out << r.step << '\t' << (std::isinf(r.delta) ? std::string("inf") : format_double(r.delta)) << '\t'
        << (r.gate_taken ? 1 : 0) << '\t' << r.candidates << '\t' << r.beam << '\t' << r.oracle_calls << '\n';
  }
}

struct SearchResult {
  Assignment assignment;
  SearchNode best;
  std::vector<TraceRecord> trace;
};

template <FeatureExtractor Extractor>
SearchResult beam_search(const ProblemInstance& instance, const PriorityConfig& config, int width,
                         std::span<const int> ordering, const Extractor& extractor) {
  if (width < 1) throw std::invalid_argument("beam width must be >= 1");
  if (static_cast<int>(ordering.size()) != instance.num_variables()) {
    throw std::invalid_argument("ordering must cover every variable");
  }
  Beam beam{{SearchNode::initial(instance)}, width};
  SearchResult result;
  for (int step = 1; beam.best().depth() < instance.num_variables(); ++step) {
    auto candidates = breadth_expand(instance, beam, ordering, extractor);
    const std::size_t n = candidates.size();
    auto filtered = filter(std::move(candidates), config, width, instance);
    beam = std::move(filtered.beam);
    result.trace.push_back({step, filtered.delta, filtered.gate_taken, n, beam.size(),
                            instance.oracle().call_count()});
  }
  result.best = beam.best();
  result.assignment = result.best.assigned;
  return result;
}

template <FeatureExtractor Extractor>
SearchResult beam_search(const ProblemInstance& instance, const PriorityConfig& config, int width,
                         const Extractor& extractor) {
  const auto order = index_ordering(instance);
  return beam_search(instance, config, width, std::span<const int>(order), extractor);
}

/// Constraint-blind greedy: every variable takes its cheapest label.
inline Assignment unconstrained_greedy(const ProblemInstance& instance) {
  Assignment a(static_cast<std::size_t>(instance.num_variables()));
  for (int k = 0; k < instance.num_variables(); ++k) {
    int best = 0;
    for (int i = 1; i < instance.arity(k); ++i) {
      if (instance.cost(k, i) < instance.cost(k, best)) best = i;
    }
    a.assign(k, best);
  }
  return a;
}

/// Greedy with forward checking: each variable takes the cheapest label that
/// still admits a feasible completion.
inline Assignment constrained_greedy(const ProblemInstance& instance, std::span<const int> ordering) {
  Assignment a(static_cast<std::size_t>(instance.num_variables()));
  if (!partial_feasible(instance, a)) throw Infeasible();
  for (int k : ordering) {
    std::vector<int> labels(static_cast<std::size_t>(instance.arity(k)));
    std::iota(labels.begin(), labels.end(), 0);
    std::stable_sort(labels.begin(), labels.end(),
                     [&](int x, int y) { return instance.cost(k, x) < instance.cost(k, y); });
    bool placed = false;
    for (int i : labels) {
      a.assign(k, i);
      if (partial_feasible(instance, a)) {
        placed = true;
        break;
      }
    }
    if (!placed) throw Infeasible();
  }
  return a;
}

inline Assignment constrained_greedy(const ProblemInstance& instance) {
  const auto order = index_ordering(instance);
  return constrained_greedy(instance, std::span<const int>(order));
}

}  // namespace speedup
