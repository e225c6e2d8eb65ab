#pragma once

// Structured inference as a 0-1 integer linear program over categorical
// variables. Variable k takes exactly one label i in [0, arity(k)); the
// indicator z(k, i) is 1 iff that label is chosen. Structural constraints are
// linear rows over the indicators. All indices are 0-based in the API; the
// plain-text instance format (instance_io.hpp) is 1-based.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "speedup/errors.hpp"

namespace speedup {

/// Absolute slack used when evaluating constraint rows.
inline constexpr double kRowTolerance = 1e-9;

enum class Sense { Equal, LessEqual, GreaterEqual };

inline const char* sense_symbol(Sense s) {
  switch (s) {
    case Sense::Equal: return "=";
    case Sense::LessEqual: return "<=";
    case Sense::GreaterEqual: return ">=";
  }
  return "?";
}

struct VariableSpec {
  int arity = 0;
  std::vector<std::string> label_names;
};

struct Term {
  int var = 0;
  int label = 0;
  double coeff = 0.0;
  friend bool operator==(const Term&, const Term&) = default;
};

struct ConstraintRow {
  std::vector<Term> terms;
  double rhs = 0.0;
  Sense sense = Sense::Equal;
  friend bool operator==(const ConstraintRow&, const ConstraintRow&) = default;
};

/// The m structural rows. The one-label-per-variable constraints are not
/// stored; Assignment enforces them by construction.
class ConstraintSystem {
 public:
  ConstraintSystem() = default;
  explicit ConstraintSystem(std::vector<ConstraintRow> rows) : rows_(std::move(rows)) {}

  void add_row(ConstraintRow row) { rows_.push_back(std::move(row)); }
  const std::vector<ConstraintRow>& rows() const noexcept { return rows_; }
  const ConstraintRow& row(std::size_t j) const { return rows_.at(j); }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  friend bool operator==(const ConstraintSystem&, const ConstraintSystem&) = default;

 private:
  std::vector<ConstraintRow> rows_;
};

inline bool row_holds(Sense sense, double activity, double rhs) {
  switch (sense) {
    case Sense::Equal: return std::abs(activity - rhs) <= kRowTolerance;
    case Sense::LessEqual: return activity <= rhs + kRowTolerance;
    case Sense::GreaterEqual: return activity >= rhs - kRowTolerance;
  }
  return false;
}

/// Partial or complete labelling; unassigned variables hold kUnassigned.
class Assignment {
 public:
  static constexpr int kUnassigned = -1;

  Assignment() = default;
  explicit Assignment(std::size_t num_variables) : labels_(num_variables, kUnassigned) {}
  Assignment(std::initializer_list<int> labels) : labels_(labels) {
    count_ = static_cast<int>(std::count_if(labels_.begin(), labels_.end(),
                                            [](int l) { return l != kUnassigned; }));
  }
  static Assignment from_labels(std::vector<int> labels) {
    Assignment a;
    a.labels_ = std::move(labels);
    a.count_ = static_cast<int>(std::count_if(a.labels_.begin(), a.labels_.end(),
                                              [](int l) { return l != kUnassigned; }));
    return a;
  }

  std::size_t size() const noexcept { return labels_.size(); }
  int assigned_count() const noexcept { return count_; }
  bool complete() const noexcept { return count_ == static_cast<int>(labels_.size()); }
  bool is_assigned(int k) const { return labels_.at(static_cast<std::size_t>(k)) != kUnassigned; }
  int label(int k) const { return labels_.at(static_cast<std::size_t>(k)); }
  const std::vector<int>& labels() const noexcept { return labels_; }

  void assign(int k, int label) {
    int& slot = labels_.at(static_cast<std::size_t>(k));
    if (slot == kUnassigned) ++count_;
    slot = label;
  }
  void unassign(int k) {
    int& slot = labels_.at(static_cast<std::size_t>(k));
    if (slot != kUnassigned) --count_;
    slot = kUnassigned;
  }

  friend bool operator==(const Assignment& a, const Assignment& b) { return a.labels_ == b.labels_; }
  friend bool operator<(const Assignment& a, const Assignment& b) { return a.labels_ < b.labels_; }

 private:
  std::vector<int> labels_;
  int count_ = 0;
};

/// Lazy, memoized, counted access to the cost coefficients c(k, i).
///
/// The counter records the number of distinct (k, i) pairs ever resolved;
/// repeated queries hit the memo. Resolution is thread-safe.
class CostOracle {
 public:
  using Source = std::function<double(int, int)>;

  CostOracle() = default;
  CostOracle(std::vector<int> arities, Source source,
             std::chrono::microseconds latency = std::chrono::microseconds{0})
      : arities_(std::move(arities)), source_(std::move(source)), latency_(latency) {
    offsets_.resize(arities_.size() + 1, 0);
    for (std::size_t k = 0; k < arities_.size(); ++k) offsets_[k + 1] = offsets_[k] + arities_[k];
    memo_.assign(static_cast<std::size_t>(offsets_.back()), 0.0);
    known_.assign(memo_.size(), 0);
  }

  static CostOracle from_table(std::vector<std::vector<double>> table,
                               std::chrono::microseconds latency = std::chrono::microseconds{0}) {
    std::vector<int> arities;
    arities.reserve(table.size());
    for (const auto& row : table) arities.push_back(static_cast<int>(row.size()));
    auto shared = std::make_shared<const std::vector<std::vector<double>>>(std::move(table));
    return CostOracle(std::move(arities),
                      [shared](int k, int i) {
                        return (*shared)[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
                      },
                      latency);
  }

  CostOracle(const CostOracle& other) { copy_from(other); }
  CostOracle& operator=(const CostOracle& other) {
    if (this != &other) copy_from(other);
    return *this;
  }
  CostOracle(CostOracle&& other) noexcept { move_from(std::move(other)); }
  CostOracle& operator=(CostOracle&& other) noexcept {
    if (this != &other) move_from(std::move(other));
    return *this;
  }

  double resolve(int k, int i) {
    const std::size_t slot = index(k, i);
    std::lock_guard lock(mutex_);
    if (known_[slot]) return memo_[slot];
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    memo_[slot] = source_(k, i);
    known_[slot] = 1;
    ++call_count_;
    return memo_[slot];
  }

  /// Evaluates the source without touching the memo or counter. Reserved for
  /// serialization and independent reference checks.
  double peek(int k, int i) const {
    (void)index(k, i);
    return source_(k, i);
  }

  bool is_resolved(int k, int i) const {
    std::lock_guard lock(mutex_);
    return known_[index(k, i)] != 0;
  }

  long call_count() const {
    std::lock_guard lock(mutex_);
    return call_count_;
  }

  /// Forgets every memoized coefficient and zeroes the counter.
  void reset() {
    std::lock_guard lock(mutex_);
    std::fill(known_.begin(), known_.end(), 0);
    call_count_ = 0;
  }

  void set_latency(std::chrono::microseconds latency) { latency_ = latency; }
  std::chrono::microseconds latency() const noexcept { return latency_; }
  const std::vector<int>& arities() const noexcept { return arities_; }
  long total_coefficients() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }

 private:
  std::size_t index(int k, int i) const {
    if (k < 0 || static_cast<std::size_t>(k) >= arities_.size() || i < 0 ||
        i >= arities_[static_cast<std::size_t>(k)]) {
      throw std::out_of_range("cost coefficient index out of range");
    }
    return static_cast<std::size_t>(offsets_[static_cast<std::size_t>(k)] + i);
  }

  void copy_from(const CostOracle& other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    arities_ = other.arities_;
    offsets_ = other.offsets_;
    source_ = other.source_;
    latency_ = other.latency_;
    memo_ = other.memo_;
    known_ = other.known_;
    call_count_ = other.call_count_;
  }
  void move_from(CostOracle&& other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    arities_ = std::move(other.arities_);
    offsets_ = std::move(other.offsets_);
    source_ = std::move(other.source_);
    latency_ = other.latency_;
    memo_ = std::move(other.memo_);
    known_ = std::move(other.known_);
    call_count_ = other.call_count_;
  }

  std::vector<int> arities_;
  std::vector<long> offsets_;
  Source source_;
  std::chrono::microseconds latency_{0};
  mutable std::mutex mutex_;
  std::vector<double> memo_;
  std::vector<char> known_;
  long call_count_ = 0;
};

/// Per-variable view of the rows, with dense coefficients over labels.
/// Used for interval forward-checking.
struct FeasibilityIndex {
  struct Incidence {
    int row = 0;
    std::vector<double> coeff;  // indexed by label
    double min_coeff = 0.0;
    double max_coeff = 0.0;
  };
  std::vector<std::vector<Incidence>> by_variable;
  std::vector<double> rhs;
  std::vector<Sense> sense;
  std::vector<double> base_lo;  // activity lower bound with nothing assigned
  std::vector<double> base_hi;
};

class ProblemInstance {
 public:
  ProblemInstance() = default;
  ProblemInstance(std::vector<VariableSpec> variables, ConstraintSystem constraints,
                  CostOracle oracle, std::optional<Assignment> gold = std::nullopt)
      : variables_(std::move(variables)),
        constraints_(std::move(constraints)),
        oracle_(std::move(oracle)),
        gold_(std::move(gold)) {
    validate();
    build_index();
  }

  int num_variables() const noexcept { return static_cast<int>(variables_.size()); }
  int arity(int k) const { return variables_.at(static_cast<std::size_t>(k)).arity; }
  const VariableSpec& variable(int k) const { return variables_.at(static_cast<std::size_t>(k)); }
  const std::vector<VariableSpec>& variables() const noexcept { return variables_; }
  const ConstraintSystem& constraints() const noexcept { return constraints_; }
  const std::optional<Assignment>& gold() const noexcept { return gold_; }
  void set_gold(std::optional<Assignment> gold) {
    gold_ = std::move(gold);
    validate();
  }

  /// Resolution mutates only the memo/counter, so it is available on const
  /// instances.
  CostOracle& oracle() const noexcept { return oracle_; }
  double cost(int k, int i) const { return oracle_.resolve(k, i); }
  long total_coefficients() const noexcept { return oracle_.total_coefficients(); }
  const FeasibilityIndex& feasibility_index() const noexcept { return index_; }

 private:
  void validate() const {
    if (variables_.empty()) throw std::invalid_argument("instance needs at least one variable");
    for (const auto& v : variables_) {
      if (v.arity < 1) throw std::invalid_argument("variable arity must be >= 1");
      if (static_cast<int>(v.label_names.size()) != v.arity) {
        throw std::invalid_argument("label_names length must equal arity");
      }
    }
    if (oracle_.arities().size() != variables_.size()) {
      throw std::invalid_argument("cost oracle shape does not match variables");
    }
    for (std::size_t k = 0; k < variables_.size(); ++k) {
      if (oracle_.arities()[k] != variables_[k].arity) {
        throw std::invalid_argument("cost oracle arity does not match variable arity");
      }
    }
    for (const auto& row : constraints_.rows()) {
      for (const auto& t : row.terms) {
        if (t.var < 0 || t.var >= num_variables() || t.label < 0 || t.label >= arity(t.var)) {
          throw std::invalid_argument("constraint row references an invalid indicator");
        }
      }
    }
    if (gold_) {
      if (static_cast<int>(gold_->size()) != num_variables() || !gold_->complete()) {
        throw std::invalid_argument("gold must be a complete assignment");
      }
      for (int k = 0; k < num_variables(); ++k) {
        if (gold_->label(k) >= arity(k)) throw std::invalid_argument("gold label out of range");
      }
    }
  }

  void build_index() {
    const std::size_t m = constraints_.size();
    index_.by_variable.assign(variables_.size(), {});
    index_.rhs.resize(m);
    index_.sense.resize(m);
    index_.base_lo.assign(m, 0.0);
    index_.base_hi.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const auto& row = constraints_.row(j);
      index_.rhs[j] = row.rhs;
      index_.sense[j] = row.sense;
      for (const auto& t : row.terms) {
        auto& incs = index_.by_variable[static_cast<std::size_t>(t.var)];
        auto it = std::find_if(incs.begin(), incs.end(),
                               [&](const auto& inc) { return inc.row == static_cast<int>(j); });
        if (it == incs.end()) {
          incs.push_back({static_cast<int>(j), std::vector<double>(static_cast<std::size_t>(arity(t.var)), 0.0),
                          0.0, 0.0});
          it = std::prev(incs.end());
        }
        it->coeff[static_cast<std::size_t>(t.label)] += t.coeff;
      }
    }
    for (auto& incs : index_.by_variable) {
      for (auto& inc : incs) {
        inc.min_coeff = *std::min_element(inc.coeff.begin(), inc.coeff.end());
        inc.max_coeff = *std::max_element(inc.coeff.begin(), inc.coeff.end());
        index_.base_lo[static_cast<std::size_t>(inc.row)] += inc.min_coeff;
        index_.base_hi[static_cast<std::size_t>(inc.row)] += inc.max_coeff;
      }
    }
  }

  std::vector<VariableSpec> variables_;
  ConstraintSystem constraints_;
  mutable CostOracle oracle_;
  std::optional<Assignment> gold_;
  FeasibilityIndex index_;
};

/// Activity of row j under a complete assignment.
inline double row_activity(const ConstraintRow& row, const Assignment& a) {
  double activity = 0.0;
  for (const auto& t : row.terms) {
    if (a.label(t.var) == t.label) activity += t.coeff;
  }
  return activity;
}

inline bool check_feasible(const ProblemInstance& instance, const Assignment& a) {
  if (static_cast<int>(a.size()) != instance.num_variables() || !a.complete()) {
    throw IncompleteAssignment();
  }
  for (const auto& row : instance.constraints().rows()) {
    if (!row_holds(row.sense, row_activity(row, a), row.rhs)) return false;
  }
  return true;
}

namespace detail {

inline bool interval_ok(Sense sense, double lo, double hi, double rhs) {
  switch (sense) {
    case Sense::Equal: return lo <= rhs + kRowTolerance && hi >= rhs - kRowTolerance;
    case Sense::LessEqual: return lo <= rhs + kRowTolerance;
    case Sense::GreaterEqual: return hi >= rhs - kRowTolerance;
  }
  return false;
}

/// Depth-first completion search with interval forward-checking on rows.
class CompletionSearch {
 public:
  CompletionSearch(const ProblemInstance& instance, const Assignment& a)
      : idx_(instance.feasibility_index()), a_(a), lo_(idx_.base_lo), hi_(idx_.base_hi) {
    for (int k = 0; k < static_cast<int>(a_.size()); ++k) {
      if (a_.is_assigned(k)) apply(k, a_.label(k), +1);
    }
  }

  bool run() {
    for (std::size_t j = 0; j < lo_.size(); ++j) {
      if (!interval_ok(idx_.sense[j], lo_[j], hi_[j], idx_.rhs[j])) return false;
    }
    return descend(0);
  }

 private:
  void apply(int k, int label, int sign) {
    for (const auto& inc : idx_.by_variable[static_cast<std::size_t>(k)]) {
      const double c = inc.coeff[static_cast<std::size_t>(label)];
      lo_[static_cast<std::size_t>(inc.row)] += sign * (c - inc.min_coeff);
      hi_[static_cast<std::size_t>(inc.row)] += sign * (c - inc.max_coeff);
    }
  }

  bool rows_ok(int k) const {
    for (const auto& inc : idx_.by_variable[static_cast<std::size_t>(k)]) {
      const auto j = static_cast<std::size_t>(inc.row);
      if (!interval_ok(idx_.sense[j], lo_[j], hi_[j], idx_.rhs[j])) return false;
    }
    return true;
  }

  bool descend(int from) {
    int k = from;
    while (k < static_cast<int>(a_.size()) && a_.is_assigned(k)) ++k;
    if (k == static_cast<int>(a_.size())) return true;
    const int arity = static_cast<int>(idx_.by_variable[static_cast<std::size_t>(k)].empty()
                                           ? 0
                                           : idx_.by_variable[static_cast<std::size_t>(k)][0].coeff.size());
    if (arity == 0) return descend(k + 1);  // unconstrained variable: any label works
    for (int label = 0; label < arity; ++label) {
      apply(k, label, +1);
      a_.assign(k, label);
      const bool ok = rows_ok(k) && descend(k + 1);
      a_.unassign(k);
      apply(k, label, -1);
      if (ok) return true;
    }
    return false;
  }

  const FeasibilityIndex& idx_;
  Assignment a_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

}  // namespace detail

/// True iff some completion of `a` satisfies every row. Never touches the
/// cost oracle.
inline bool partial_feasible(const ProblemInstance& instance, const Assignment& a) {
  if (static_cast<int>(a.size()) != instance.num_variables()) {
    throw std::invalid_argument("assignment size does not match instance");
  }
  return detail::CompletionSearch(instance, a).run();
}

/// Sum of resolved coefficients of a complete assignment, in variable-index
/// order.
inline double objective_of(const ProblemInstance& instance, const Assignment& a) {
  if (static_cast<int>(a.size()) != instance.num_variables() || !a.complete()) {
    throw IncompleteAssignment();
  }
  double total = 0.0;
  for (int k = 0; k < instance.num_variables(); ++k) total += instance.cost(k, a.label(k));
  return total;
}

struct ExactSolution {
  Assignment assignment;
  double objective = 0.0;
  long expansions = 0;
};

inline constexpr long kDefaultSolverBudget = 5'000'000;

/// Exact minimization by depth-first branch and bound.
///
/// Variables are branched in index order, labels in ascending resolved cost
/// (smaller label first on ties). Subtrees are pruned by partial_feasible and
/// by the incumbent bound. Among optimal assignments the lexicographically
/// smallest label vector is returned.
inline ExactSolution solve_exact(const ProblemInstance& instance, long budget = kDefaultSolverBudget) {
  if (budget <= 0) throw std::invalid_argument("solver budget must be positive");
  const int K = instance.num_variables();

  std::vector<std::vector<int>> label_order(static_cast<std::size_t>(K));
  std::vector<double> min_cost(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto& order = label_order[static_cast<std::size_t>(k)];
    order.resize(static_cast<std::size_t>(instance.arity(k)));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return instance.cost(k, a) < instance.cost(k, b); });
    min_cost[static_cast<std::size_t>(k)] = instance.cost(k, order.front());
  }
  std::vector<double> suffix_min(static_cast<std::size_t>(K) + 1, 0.0);
  for (int k = K - 1; k >= 0; --k) {
    suffix_min[static_cast<std::size_t>(k)] =
        suffix_min[static_cast<std::size_t>(k) + 1] + min_cost[static_cast<std::size_t>(k)];
  }

  Assignment current(static_cast<std::size_t>(K));
  std::optional<Assignment> best;
  double best_cost = std::numeric_limits<double>::infinity();
  long expansions = 0;

  std::function<void(int, double)> dfs = [&](int k, double partial) {
    if (++expansions > budget) throw BudgetExhausted(expansions - 1);
    if (k == K) {
      if (!best || partial < best_cost || (partial == best_cost && current < *best)) {
        best = current;
        best_cost = partial;
      }
      return;
    }
    const double bound = partial + suffix_min[static_cast<std::size_t>(k)];
    if (best && bound > best_cost + 1e-9 * (1.0 + std::abs(best_cost))) return;
    for (int label : label_order[static_cast<std::size_t>(k)]) {
      current.assign(k, label);
      if (partial_feasible(instance, current)) dfs(k + 1, partial + instance.cost(k, label));
      current.unassign(k);
    }
  };
  dfs(0, 0.0);

  if (!best) throw Infeasible();
  return {*best, best_cost, expansions};
}

}  // namespace speedup
