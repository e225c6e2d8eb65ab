#pragma once

// Lagrangian relaxation of the structural rows. With multipliers u,
//   L(z, u) = sum_{k,i} (c(k,i) - sum_j u_j A(j,k,i)) z(k,i) + sum_j b_j u_j
// and theta(u) = min_z L(z, u) over one-label-per-variable assignments.
//
// Sign convention (follows from the minus sign in L): multipliers of >= rows
// are kept >= 0, of <= rows <= 0, of = rows free. Under it theta(u) never
// exceeds the primal optimum.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "speedup/ilp_core.hpp"
#include "speedup/model.hpp"
#include "speedup/search.hpp"
#include "speedup/sparse_vector.hpp"

namespace speedup {

struct DualState {
  std::vector<double> u;  // one multiplier per row
  double dual_value = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  double eta0 = 1.0;
  std::string decay = "inv_sqrt";  // eta_t = eta0 / sqrt(t)
  bool converged = false;
};

inline double project_multiplier(Sense sense, double value) {
  switch (sense) {
    case Sense::Equal: return value;
    case Sense::LessEqual: return std::min(value, 0.0);
    case Sense::GreaterEqual: return std::max(value, 0.0);
  }
  return value;
}

/// Reduced cost c(k,i) - sum_j u_j A(j,k,i).
inline double reduced_cost(const ProblemInstance& instance, std::span<const double> u, int k, int i) {
  double r = instance.cost(k, i);
  for (const auto& inc : instance.feasibility_index().by_variable[static_cast<std::size_t>(k)]) {
    r -= u[static_cast<std::size_t>(inc.row)] * inc.coeff[static_cast<std::size_t>(i)];
  }
  return r;
}

struct RelaxedSolution {
  Assignment assignment;
  double value = 0.0;  // theta(u)
};

/// Per-variable argmin of reduced costs (smallest label on ties).
inline RelaxedSolution dual_minimizer(const ProblemInstance& instance, std::span<const double> u) {
  if (u.size() != instance.constraints().size()) throw std::invalid_argument("one multiplier per row required");
  RelaxedSolution out{Assignment(static_cast<std::size_t>(instance.num_variables())), 0.0};
  for (int k = 0; k < instance.num_variables(); ++k) {
    int best = 0;
    double best_r = reduced_cost(instance, u, k, 0);
    for (int i = 1; i < instance.arity(k); ++i) {
      const double r = reduced_cost(instance, u, k, i);
      if (r < best_r) {
        best_r = r;
        best = i;
      }
    }
    out.assignment.assign(k, best);
    out.value += best_r;
  }
  for (std::size_t j = 0; j < u.size(); ++j) out.value += instance.constraints().row(j).rhs * u[j];
  return out;
}

inline RelaxedSolution dual_minimizer(const ProblemInstance& instance, const DualState& state) {
  return dual_minimizer(instance, std::span<const double>(state.u));
}

/// L(z, u) for an arbitrary complete z; used to cross-check the minimizer.
inline double lagrangian_value(const ProblemInstance& instance, std::span<const double> u, const Assignment& z) {
  double value = 0.0;
  for (int k = 0; k < instance.num_variables(); ++k) value += instance.cost(k, z.label(k));
  for (std::size_t j = 0; j < u.size(); ++j) {
    const auto& row = instance.constraints().row(j);
    value -= u[j] * (row_activity(row, z) - row.rhs);
  }
  return value;
}

/// Projected subgradient ascent with eta_t = eta0 / sqrt(t). Returns the best
/// iterate seen. Stops when the projected step vanishes (norm < tol) or when
/// `stall_window` iterations pass without improving the best value by more
/// than tol.
inline DualState solve_dual(const ProblemInstance& instance, int max_iters, double tol, double eta0 = 1.0,
                            int stall_window = 500) {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  const auto& rows = instance.constraints().rows();
  const std::size_t m = rows.size();

  DualState best;
  best.eta0 = eta0;
  best.u.assign(m, 0.0);
  std::vector<double> u(m, 0.0);

  if (m == 0) {
    best.dual_value = dual_minimizer(instance, best).value;
    best.iterations = 1;
    best.converged = true;
    return best;
  }

  int since_improvement = 0;
  for (int t = 1; t <= max_iters; ++t) {
    const auto relaxed = dual_minimizer(instance, std::span<const double>(u));
    if (relaxed.value > best.dual_value + tol || t == 1) {
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (relaxed.value > best.dual_value) {
      best.dual_value = relaxed.value;
      best.u = u;
    }
    best.iterations = t;

    const double eta = eta0 / std::sqrt(static_cast<double>(t));
    double step_norm2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double s = rows[j].rhs - row_activity(rows[j], relaxed.assignment);
      const double next = project_multiplier(rows[j].sense, u[j] + eta * s);
      const double projected = (next - u[j]) / eta;
      step_norm2 += projected * projected;
      u[j] = next;
    }
    if (std::sqrt(step_norm2) < tol) {
      best.converged = true;
      break;
    }
    if (since_improvement >= stall_window) {
      best.converged = true;
      break;
    }
  }
  return best;
}

/// Feature space of the optimal heuristic: one component per (k, i, j).
class DualFeatureSpace {
 public:
  DualFeatureSpace(const ProblemInstance& instance, std::vector<double> u)
      : u_(std::move(u)), rows_(instance.constraints().size()) {
    for (int k = 0; k < instance.num_variables(); ++k) max_arity_ = std::max(max_arity_, instance.arity(k));
  }

  FeatureId id(int k, int i, std::size_t j) const {
    return static_cast<FeatureId>((static_cast<std::size_t>(k) * static_cast<std::size_t>(max_arity_) +
                                   static_cast<std::size_t>(i)) * rows_ + j);
  }

  /// phi_{kij}(v) = u_j when (k, i) is in v.
  SparseVector extract(const ProblemInstance& instance, const Assignment& a) const {
    SparseVector phi;
    for (int k = 0; k < instance.num_variables(); ++k) {
      if (a.is_assigned(k)) phi += delta(instance, a, k, a.label(k));
    }
    return phi;
  }

  SparseVector delta(const ProblemInstance&, const Assignment&, int k, int i) const {
    SparseVector d;
    for (std::size_t j = 0; j < rows_; ++j) d.add(id(k, i, j), u_[j]);
    return d;
  }

  /// w_{kij} = A(j, k, i).
  SparseVector weights(const ProblemInstance& instance) const {
    SparseVector w;
    const auto& rows = instance.constraints().rows();
    for (std::size_t j = 0; j < rows.size(); ++j) {
      for (const auto& t : rows[j].terms) w.add(id(t.var, t.label, j), t.coeff);
    }
    return w;
  }

  const std::vector<double>& multipliers() const noexcept { return u_; }

 private:
  std::vector<double> u_;
  std::size_t rows_;
  int max_arity_ = 0;
};

struct OptimalHeuristicFeatures {
  SparseVector phi;
  SparseVector w;
  double h() const { return -w.dot(phi); }
};

inline OptimalHeuristicFeatures optimal_heuristic_features(const ProblemInstance& instance, const DualState& state,
                                                           const SearchNode& v) {
  const DualFeatureSpace space(instance, state.u);
  return {space.extract(instance, v.assigned), space.weights(instance)};
}

/// Width-1 search under p(v) = g(v) + h*(v).
inline SearchResult greedy_with_optimal_heuristic(const ProblemInstance& instance, const DualState& state) {
  const DualFeatureSpace space(instance, state.u);
  SpeedupModel model;
  model.weights = space.weights(instance);
  return beam_search(instance, PriorityConfig::full(model), 1, space);
}

}  // namespace speedup
