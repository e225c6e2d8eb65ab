#pragma once

// Method comparison on entity-relation datasets: F1 against gold and against
// the exact solver, validity, wall time, and cost-oracle calls.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "speedup/er_task.hpp"
#include "speedup/errors.hpp"
#include "speedup/ilp_core.hpp"
#include "speedup/instance_io.hpp"
#include "speedup/model.hpp"
#include "speedup/search.hpp"

namespace speedup {

inline constexpr const char* kEvalSchema = "speedup-eval-v1";

struct F1Counts {
  long true_positive = 0;
  long false_positive = 0;
  long false_negative = 0;

  /// `null_label` < 0 means the variable has no null class.
  void add(int predicted, int reference, int null_label) {
    const bool pred_null = predicted == null_label;
    const bool ref_null = reference == null_label;
    if (predicted == reference) {
      if (!pred_null) ++true_positive;
      return;
    }
    if (!pred_null) ++false_positive;
    if (!ref_null) ++false_negative;
  }

  F1Counts& operator+=(const F1Counts& o) {
    true_positive += o.true_positive;
    false_positive += o.false_positive;
    false_negative += o.false_negative;
    return *this;
  }
};

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// An empty confusion (nothing non-null anywhere) scores 1.0: nothing was
/// missed and nothing was invented.
inline F1Score score(const F1Counts& c) {
  if (c.true_positive + c.false_positive + c.false_negative == 0) return {1.0, 1.0, 1.0};
  F1Score s;
  const long predicted = c.true_positive + c.false_positive;
  const long actual = c.true_positive + c.false_negative;
  s.precision = predicted ? static_cast<double>(c.true_positive) / static_cast<double>(predicted) : 0.0;
  s.recall = actual ? static_cast<double>(c.true_positive) / static_cast<double>(actual) : 0.0;
  s.f1 = 2.0 * static_cast<double>(c.true_positive) /
         static_cast<double>(2 * c.true_positive + c.false_positive + c.false_negative);
  return s;
}

/// Micro-averaged F1 over aligned label sequences. `null_labels[k]` is the
/// null label of position k, or -1 for none.
inline F1Score compute_f1(std::span<const int> predictions, std::span<const int> references,
                          std::span<const int> null_labels) {
  if (predictions.size() != references.size() || null_labels.size() != references.size()) throw LengthMismatch();
  F1Counts c;
  for (std::size_t k = 0; k < predictions.size(); ++k) c.add(predictions[k], references[k], null_labels[k]);
  return score(c);
}

enum class MethodKind { Solver, UnconstrainedGreedy, ConstrainedGreedy, Speedup, GatedSpeedup };

struct MethodSpec {
  MethodKind kind = MethodKind::Solver;
  int width = 1;
  double theta = 0.0;  // gated rows only

  std::string name() const {
    switch (kind) {
      case MethodKind::Solver: return "solver";
      case MethodKind::UnconstrainedGreedy: return "greedy";
      case MethodKind::ConstrainedGreedy: return "constrained-greedy";
      case MethodKind::Speedup: return "speedup-b" + std::to_string(width);
      case MethodKind::GatedSpeedup: return "gated-b" + std::to_string(width) + "-theta" + format_double(theta);
    }
    return "?";
  }
  bool needs_model() const { return kind == MethodKind::Speedup || kind == MethodKind::GatedSpeedup; }
};

struct EvalConfig {
  std::vector<int> widths{1, 2};
  std::vector<double> thetas{0.0, 0.25, 0.5};
  int repeat = 5;
  int workers = 1;
  bool include_null = false;
  bool gated = true;  // add gated rows for every (width, theta)
};

inline std::vector<MethodSpec> method_grid(const EvalConfig& config, bool have_model) {
  std::vector<MethodSpec> out{{MethodKind::Solver}, {MethodKind::UnconstrainedGreedy}, {MethodKind::ConstrainedGreedy}};
  if (!have_model) return out;
  for (int b : config.widths) out.push_back({MethodKind::Speedup, b});
  if (config.gated) {
    for (int b : config.widths) {
      for (double t : config.thetas) out.push_back({MethodKind::GatedSpeedup, b, t});
    }
  }
  return out;
}

struct MethodRow {
  MethodSpec method;
  F1Score entity_vs_gold;
  F1Score relation_vs_gold;
  F1Score entity_vs_solver;
  F1Score relation_vs_solver;
  double validity = 0.0;
  double time_mean_ms = 0.0;  // per instance
  double time_stddev_ms = 0.0;
  double oracle_calls_mean = 0.0;
  std::vector<long> oracle_calls;  // per instance, in dataset order
  std::vector<char> valid;         // per instance
};

struct EvalReport {
  EvalConfig config;
  std::size_t instances = 0;
  std::vector<MethodRow> rows;
  std::vector<long> total_coefficients;  // per instance

  const MethodRow* find(const std::string& name) const {
    for (const auto& r : rows) {
      if (r.method.name() == name) return &r;
    }
    return nullptr;
  }
};

namespace detail {

struct InstanceOutcome {
  Assignment prediction;
  long oracle_calls = 0;
  std::vector<double> times_ms;
};

inline Assignment run_method(const ProblemInstance& inst, const MethodSpec& m, const SpeedupModel* model) {
  static const er::ERFeatureExtractor extractor;
  switch (m.kind) {
    case MethodKind::Solver: return solve_exact(inst).assignment;
    case MethodKind::UnconstrainedGreedy: return unconstrained_greedy(inst);
    case MethodKind::ConstrainedGreedy: return constrained_greedy(inst);
    case MethodKind::Speedup: return beam_search(inst, PriorityConfig::full(*model), m.width, extractor).assignment;
    case MethodKind::GatedSpeedup:
      return beam_search(inst, PriorityConfig::gated(*model, m.theta), m.width, extractor).assignment;
  }
  throw std::logic_error("unknown method");
}

inline void tally(const ProblemInstance& inst, const Assignment& pred, const Assignment& ref, bool include_null,
                  F1Counts& entity, F1Counts& relation) {
  const auto layout = er::ERLayout::from_num_variables(inst.num_variables());
  for (int k = 0; k < inst.num_variables(); ++k) {
    if (layout.is_entity(k)) {
      entity.add(pred.label(k), ref.label(k), include_null ? -1 : er::NoEnt);
    } else {
      relation.add(pred.label(k), ref.label(k), include_null ? -1 : er::NoRel);
    }
  }
}

/// Runs `body(n)` for n in [0, count) on up to `workers` threads.
template <class Body>
void parallel_for(std::size_t count, int workers, Body body) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count < 2) {
    for (std::size_t n = 0; n < count; ++n) body(n);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t n = next++; n < count; n = next++) body(n);
    });
  }
}

}  // namespace detail

/// Evaluates every method on every instance. The oracle memo of each instance
/// is reset before each run, so call counts are per run. Gold is required.
inline EvalReport evaluate(std::span<const ProblemInstance> instances, const SpeedupModel* model,
                           const EvalConfig& config) {
  if (config.repeat < 1) throw std::invalid_argument("repeat must be >= 1");
  for (const auto& inst : instances) {
    if (!inst.gold()) throw std::invalid_argument("evaluation needs gold assignments");
  }
  const auto methods = method_grid(config, model != nullptr);
  const std::size_t N = instances.size();
  EvalReport report;
  report.config = config;
  report.instances = N;
  report.total_coefficients.resize(N);

  // outcomes[m][n]
  std::vector<std::vector<detail::InstanceOutcome>> outcomes(methods.size(), std::vector<detail::InstanceOutcome>(N));
  detail::parallel_for(N, config.workers, [&](std::size_t n) {
    const auto& inst = instances[n];
    report.total_coefficients[n] = inst.total_coefficients();
    for (std::size_t m = 0; m < methods.size(); ++m) {
      auto& out = outcomes[m][n];
      for (int r = 0; r < config.repeat; ++r) {
        inst.oracle().reset();
        const auto t0 = std::chrono::steady_clock::now();
        Assignment pred = detail::run_method(inst, methods[m], model);
        const auto t1 = std::chrono::steady_clock::now();
        out.times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        if (r == 0) {
          out.prediction = std::move(pred);
          out.oracle_calls = inst.oracle().call_count();
        }
      }
      inst.oracle().reset();
    }
  });

  const auto& solver_out = outcomes.front();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodRow row;
    row.method = methods[m];
    F1Counts eg, rg, es, rs;
    long valid = 0;
    long calls = 0;
    std::vector<double> pass_ms(static_cast<std::size_t>(config.repeat), 0.0);
    for (std::size_t n = 0; n < N; ++n) {
      const auto& o = outcomes[m][n];
      detail::tally(instances[n], o.prediction, *instances[n].gold(), config.include_null, eg, rg);
      detail::tally(instances[n], o.prediction, solver_out[n].prediction, config.include_null, es, rs);
      const bool ok = check_feasible(instances[n], o.prediction);
      valid += ok ? 1 : 0;
      row.valid.push_back(ok ? 1 : 0);
      calls += o.oracle_calls;
      row.oracle_calls.push_back(o.oracle_calls);
      for (std::size_t r = 0; r < pass_ms.size(); ++r) pass_ms[r] += o.times_ms[r];
    }
    row.entity_vs_gold = score(eg);
    row.relation_vs_gold = score(rg);
    row.entity_vs_solver = score(es);
    row.relation_vs_solver = score(rs);
    const double denom = N ? static_cast<double>(N) : 1.0;
    row.validity = N ? static_cast<double>(valid) / denom : 1.0;
    row.oracle_calls_mean = static_cast<double>(calls) / denom;
    double mean = 0.0;
    for (double& p : pass_ms) {
      p /= denom;
      mean += p;
    }
    mean /= static_cast<double>(pass_ms.size());
    double var = 0.0;
    for (double p : pass_ms) var += (p - mean) * (p - mean);
    row.time_mean_ms = mean;
    row.time_stddev_ms = pass_ms.size() > 1 ? std::sqrt(var / static_cast<double>(pass_ms.size() - 1)) : 0.0;
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Exports. Timing columns are last in the CSV and grouped under "timing" in
// JSON, so reproducibility checks can drop them.

inline void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "schema,method,width,theta,entity_f1_gold,relation_f1_gold,entity_f1_solver,relation_f1_solver,"
         "validity,oracle_calls_mean,time_mean_ms,time_stddev_ms\n";
  for (const auto& r : report.rows) {
    const bool gated = r.method.kind == MethodKind::GatedSpeedup;
    const bool beam = r.method.needs_model();
    out << kEvalSchema << ',' << r.method.name() << ',' << (beam ? std::to_string(r.method.width) : "") << ','
        << (gated ? format_double(r.method.theta) : "") << ',' << format_double(r.entity_vs_gold.f1) << ','
        << format_double(r.relation_vs_gold.f1) << ',' << format_double(r.entity_vs_solver.f1) << ','
        << format_double(r.relation_vs_solver.f1) << ',' << format_double(r.validity) << ','
        << format_double(r.oracle_calls_mean) << ',' << format_double(r.time_mean_ms) << ','
        << format_double(r.time_stddev_ms) << '\n';
  }
}

inline nlohmann::ordered_json report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = kEvalSchema;
  j["instances"] = report.instances;
  j["config"] = {{"widths", report.config.widths},
                 {"thetas", report.config.thetas},
                 {"repeat", report.config.repeat},
                 {"include_null", report.config.include_null}};
  auto f1 = [](const F1Score& s) {
    return nlohmann::ordered_json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  };
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["method"] = r.method.name();
    if (r.method.needs_model()) row["width"] = r.method.width;
    if (r.method.kind == MethodKind::GatedSpeedup) row["theta"] = r.method.theta;
    row["entity_vs_gold"] = f1(r.entity_vs_gold);
    row["relation_vs_gold"] = f1(r.relation_vs_gold);
    row["entity_vs_solver"] = f1(r.entity_vs_solver);
    row["relation_vs_solver"] = f1(r.relation_vs_solver);
    row["validity"] = r.validity;
    row["oracle_calls_mean"] = r.oracle_calls_mean;
    row["timing"] = {{"mean_ms", r.time_mean_ms}, {"stddev_ms", r.time_stddev_ms}};
    j["rows"].push_back(std::move(row));
  }
  return j;
}

/// Fixed-width table for terminals.
inline void write_report_table(std::ostream& out, const EvalReport& report) {
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s %8s %12s %18s\n", "method", "entF1/g", "relF1/g",
                "entF1/s", "relF1/s", "valid", "calls", "ms/instance");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-24s %8.3f %8.3f %8.3f %8.3f %8.3f %12.2f %9.4f +- %.4f\n",
                  r.method.name().c_str(), r.entity_vs_gold.f1, r.relation_vs_gold.f1, r.entity_vs_solver.f1,
                  r.relation_vs_solver.f1, r.validity, r.oracle_calls_mean, r.time_mean_ms, r.time_stddev_ms);
    out << line;
  }
}

}  // namespace speedup
