#pragma once

// Slow reference computations used to cross-check the fast paths. They read
// costs through CostOracle::peek and evaluate rows directly from the
// constraint terms, sharing no code with the solver or the search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "speedup/ilp_core.hpp"
#include "speedup/model.hpp"
#include "speedup/search.hpp"

namespace speedup::oracle {

struct EnumerationResult {
  std::optional<Assignment> argmin;  // lexicographically smallest among minima
  double minimum = std::numeric_limits<double>::infinity();
  long feasible_count = 0;
};

namespace detail {

inline bool row_satisfied(const ConstraintRow& row, const std::vector<int>& labels) {
  double activity = 0.0;
  for (const auto& t : row.terms) {
    if (labels[static_cast<std::size_t>(t.var)] == t.label) activity += t.coeff;
  }
  switch (row.sense) {
    case Sense::Equal: return std::abs(activity - row.rhs) <= kRowTolerance;
    case Sense::LessEqual: return activity <= row.rhs + kRowTolerance;
    case Sense::GreaterEqual: return activity >= row.rhs - kRowTolerance;
  }
  return false;
}

}  // namespace detail

/// Enumerates every complete assignment in lexicographic order. A row is
/// evaluated as soon as its highest-index variable is fixed, which discards
/// only subtrees that are already infeasible.
inline EnumerationResult brute_force_minimum(const ProblemInstance& instance) {
  const int K = instance.num_variables();
  const auto& rows = instance.constraints().rows();
  std::vector<std::vector<std::size_t>> closing(static_cast<std::size_t>(K));
  std::vector<std::size_t> empty_rows;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    int last = -1;
    for (const auto& t : rows[j].terms) last = std::max(last, t.var);
    if (last < 0) {
      empty_rows.push_back(j);
    } else {
      closing[static_cast<std::size_t>(last)].push_back(j);
    }
  }

  EnumerationResult out;
  std::vector<int> labels(static_cast<std::size_t>(K), 0);
  for (std::size_t j : empty_rows) {
    if (!detail::row_satisfied(rows[j], labels)) return out;
  }

  auto visit = [&](auto&& self, int k) -> void {
    if (k == K) {
      double total = 0.0;
      for (int v = 0; v < K; ++v) total += instance.oracle().peek(v, labels[static_cast<std::size_t>(v)]);
      ++out.feasible_count;
      // Enumeration is lexicographic, so the first minimum found is the smallest.
      if (!out.argmin || total < out.minimum) {
        out.minimum = total;
        out.argmin = Assignment::from_labels(labels);
      }
      return;
    }
    for (int i = 0; i < instance.arity(k); ++i) {
      labels[static_cast<std::size_t>(k)] = i;
      bool ok = true;
      for (std::size_t j : closing[static_cast<std::size_t>(k)]) {
        if (!detail::row_satisfied(rows[j], labels)) {
          ok = false;
          break;
        }
      }
      if (ok) self(self, k + 1);
    }
    labels[static_cast<std::size_t>(k)] = 0;
  };
  visit(visit, 0);
  return out;
}

/// Heuristic gap by full sort.
inline double naive_heuristic_gap(std::span<const SearchNode> candidates, const SpeedupModel& model, int width) {
  if (candidates.size() <= static_cast<std::size_t>(width)) return std::numeric_limits<double>::infinity();
  std::vector<double> h;
  for (const auto& v : candidates) h.push_back(-model.weights.dot(v.phi));
  std::sort(h.begin(), h.end());
  return h[static_cast<std::size_t>(width)] - h[static_cast<std::size_t>(width) - 1];
}

/// min over all complete z of L(z, u), by enumeration.
inline double brute_force_dual_value(const ProblemInstance& instance, std::span<const double> u) {
  const int K = instance.num_variables();
  const auto& rows = instance.constraints().rows();
  std::vector<int> labels(static_cast<std::size_t>(K), 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    double value = 0.0;
    for (int k = 0; k < K; ++k) value += instance.oracle().peek(k, labels[static_cast<std::size_t>(k)]);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      double activity = 0.0;
      for (const auto& t : rows[j].terms) {
        if (labels[static_cast<std::size_t>(t.var)] == t.label) activity += t.coeff;
      }
      value -= u[j] * (activity - rows[j].rhs);
    }
    best = std::min(best, value);
    int k = K - 1;
    while (k >= 0 && ++labels[static_cast<std::size_t>(k)] == instance.arity(k)) {
      labels[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return best;
}

}  // namespace speedup::oracle
