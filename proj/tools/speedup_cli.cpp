// speedup_cli: dataset generation, training, evaluation, verification and
// dual reports for the entity-relation inference engine.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "speedup/speedup.hpp"
#include "speedup/verify.hpp"

namespace fs = std::filesystem;
using namespace speedup;

namespace {

struct RunDir {
  fs::path root;

  fs::path operator/(const std::string& name) const { return root / name; }
};

// Creates the run directory, copies the config file verbatim and writes the
// resolved key/value set next to it.
RunDir open_run_dir(const RunConfig& config, const std::string& config_file) {
  RunDir dir{config.str("out")};
  fs::create_directories(dir.root);
  if (!config_file.empty()) fs::copy_file(config_file, dir / "config.txt", fs::copy_options::overwrite_existing);
  std::ofstream resolved(dir / "resolved_config.txt", std::ios::binary);
  config.write(resolved);
  return dir;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<int> entity_counts(const RunConfig& config) {
  std::vector<int> out;
  for (long e : config.integers("entities")) out.push_back(static_cast<int>(e));
  if (out.empty()) throw std::invalid_argument("entities must list at least one entity count");
  return out;
}

std::vector<ProblemInstance> load_dataset(const RunConfig& config) {
  const auto& path = config.str("dataset");
  if (path.empty()) throw std::invalid_argument("no dataset given (set dataset=...)");
  auto instances = read_instances_file(path);
  const auto latency = std::chrono::microseconds(config.integer("latency_us"));
  for (auto& inst : instances) inst.oracle().set_latency(latency);
  return instances;
}

int cmd_generate(const RunConfig& config, const RunDir& dir) {
  const auto count = static_cast<std::size_t>(config.integer("count"));
  const auto seed = static_cast<std::uint64_t>(config.integer("seed"));
  const auto entities = entity_counts(config);
  DatasetManifest manifest;
  manifest.count = count;
  manifest.seed = seed;
  manifest.entities = entities;

  std::vector<ProblemInstance> instances;
  if (config.boolean("separable")) {
    const double target = config.real("margin_target");
    if (entities.size() != 1) throw std::invalid_argument("separable sets use a single entity count");
    if (count > 0) {
      auto set = er::plant_separable_set(count, entities.front(), target, seed);
      manifest.certificate = certificate_of(set, target);
      instances = std::move(set.instances);
    }
  } else {
    const auto profile = er::profile_by_name(config.str("profile"));
    manifest.profile = profile;
    instances = er::build_dataset(count, entities, seed, profile);
  }
  const auto dataset = dir / "dataset.txt";
  write_instances_file(dataset, instances);
  write_manifest_file(manifest_path(dataset), manifest);
  std::cout << "wrote " << instances.size() << " instances to " << dataset.string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& config, const RunDir& dir) {
  const auto instances = load_dataset(config);
  const er::ERFeatureExtractor extractor;
  TrainOptions options;
  options.width = static_cast<int>(config.integer("train_width"));
  options.epochs = static_cast<int>(config.integer("epochs"));
  const long budget = config.integer("solver_budget");
  const auto result = train(std::span<const ProblemInstance>(instances), extractor, options, exact_solver(budget),
                            extractor.schema());
  save_model_file(dir / "model.txt", result.model, extractor);

  nlohmann::ordered_json report;
  report["update_count"] = result.model.update_count;
  report["epoch_updates"] = result.model.epoch_log;
  report["converged"] = result.converged;
  report["solver_failures"] = result.skipped.size();
  report["pairs_seen"] = result.pairs_seen;
  report["pairs_recorded"] = result.pairs.size();

  const auto manifest = read_manifest_file(manifest_path(config.str("dataset")));
  if (result.pairs.empty()) {
    report["bound"] = "no updates";
  } else {
    const bool planted = manifest && manifest->certificate;
    const SparseVector direction = planted ? manifest->certificate->direction : unit_direction(result.model.weights);
    if (direction.nnz() == 0) {
      report["bound"] = "no direction";
    } else {
      const auto d = measure_bound_constants(result.pairs, direction);
      report["bound"] = {{"direction", planted ? "planted" : "learned"},
                         {"r_phi", d.r_phi},
                         {"r_g", d.r_g},
                         {"gamma", d.gamma},
                         {"value", std::isfinite(d.bound) ? nlohmann::ordered_json(d.bound) : "inf"},
                         {"pairs_examined", d.margin_pairs_examined},
                         {"within_bound", static_cast<double>(result.model.update_count) <= d.bound}};
    }
  }
  write_json(dir / "train_report.json", report);
  for (const auto& line : result.log) std::cerr << line << '\n';
  std::cout << "updates " << result.model.update_count << " over " << result.model.epoch_log.size() << " epochs";
  if (!result.skipped.empty()) std::cout << ", solver failures " << result.skipped.size();
  std::cout << '\n';
  return 0;
}

int cmd_eval(const RunConfig& config, const RunDir& dir) {
  const auto instances = load_dataset(config);
  std::optional<SpeedupModel> model;
  if (const auto& path = config.str("model"); !path.empty()) {
    if (!fs::exists(path)) throw std::runtime_error("model file " + path + " not found");
    model = load_model_file(path, er::ERFeatureExtractor{});
  }
  EvalConfig eval;
  eval.widths.clear();
  for (long b : config.integers("widths")) eval.widths.push_back(static_cast<int>(b));
  eval.thetas = config.reals("thetas");
  eval.repeat = static_cast<int>(config.integer("repeat"));
  eval.workers = static_cast<int>(config.integer("workers"));
  eval.include_null = config.boolean("f1_include_null");
  const auto report = evaluate(instances, model ? &*model : nullptr, eval);

  write_report_table(std::cout, report);
  std::ofstream csv(dir / "metrics.csv", std::ios::binary);
  write_report_csv(csv, report);
  write_json(dir / "metrics.json", report_json(report));
  return 0;
}

void print_suite(const verify::SuiteReport& r) {
  std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " checked=" << r.checked << " skipped=" << r.skipped;
  for (const auto& [k, v] : r.stats) std::cout << ' ' << k << '=' << format_double(v);
  std::cout << '\n';
  if (!r.passed) std::cout << "  counterexample: " << r.counterexample << '\n';
}

int cmd_verify(const RunConfig& config, const RunDir& dir) {
  const auto seed = static_cast<std::uint64_t>(config.integer("seed"));
  std::vector<verify::SuiteReport> reports;
  const auto solver_set = verify::solver_fixtures(static_cast<std::size_t>(config.integer("verify_solver_instances")), seed);
  reports.push_back(verify::solver_equivalence(solver_set));
  reports.push_back(verify::beam_set_equality(config.integer("verify_beam_sets"), seed + 1));
  const auto dual_set = er::build_dataset(static_cast<std::size_t>(config.integer("verify_dual_instances")), {2, 3},
                                          seed + 2, er::hard_profile());
  verify::DualSuiteOptions dual;
  dual.max_iters = static_cast<int>(config.integer("max_iters"));
  dual.tol = config.real("tol");
  reports.push_back(verify::lagrangian_exactness(dual_set, seed + 3, dual));
  verify::MistakeBoundOptions mb;
  mb.count = static_cast<std::size_t>(config.integer("verify_planted_instances"));
  mb.margin_target = config.real("margin_target");
  mb.seed = seed + 4;
  reports.push_back(verify::mistake_bound(mb));

  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& r : reports) {
    print_suite(r);
    all = all && r.passed;
    nlohmann::ordered_json s{{"suite", r.name}, {"passed", r.passed}, {"checked", r.checked}, {"skipped", r.skipped}};
    for (const auto& [k, v] : r.stats) s["stats"][k] = v;
    if (!r.passed) s["counterexample"] = r.counterexample;
    j.push_back(std::move(s));
  }
  write_json(dir / "verify.json", j);
  return all ? 0 : 1;
}

int cmd_dual(const RunConfig& config, const RunDir& dir) {
  std::vector<ProblemInstance> instances;
  if (config.str("dataset").empty()) {
    instances = er::build_dataset(static_cast<std::size_t>(config.integer("count")), entity_counts(config),
                                  static_cast<std::uint64_t>(config.integer("seed")),
                                  er::profile_by_name(config.str("profile")));
  } else {
    instances = load_dataset(config);
  }
  const int max_iters = static_cast<int>(config.integer("max_iters"));
  const double tol = config.real("tol");
  const double eta0 = config.real("eta0");
  std::ofstream csv(dir / "dual.csv", std::ios::binary);
  csv << "instance,primal,dual,gap,zero_gap,iterations,converged,greedy_objective,greedy_exact\n";
  long violations = 0;
  long zero_gap = 0;
  long exact = 0;
  for (std::size_t n = 0; n < instances.size(); ++n) {
    const auto& inst = instances[n];
    const double primal = solve_exact(inst, config.integer("solver_budget")).objective;
    const auto state = solve_dual(inst, max_iters, tol, eta0);
    const double gap = primal - state.dual_value;
    const auto greedy = greedy_with_optimal_heuristic(inst, state);
    const double greedy_obj = objective_of(inst, greedy.assignment);
    const bool greedy_exact =
        check_feasible(inst, greedy.assignment) && std::abs(greedy_obj - primal) <= 1e-9 * (1.0 + std::abs(primal));
    if (state.dual_value > primal + 1e-9) ++violations;
    const bool is_zero_gap = std::abs(gap) < 1e-6;
    if (is_zero_gap) {
      ++zero_gap;
      if (greedy_exact) ++exact;
    }
    csv << n << ',' << format_double(primal) << ',' << format_double(state.dual_value) << ',' << format_double(gap)
        << ',' << (is_zero_gap ? 1 : 0) << ',' << state.iterations << ',' << (state.converged ? 1 : 0) << ',' << format_double(greedy_obj) << ','
        << (greedy_exact ? 1 : 0) << '\n';
  }
  std::cout << "instances " << instances.size() << ", weak duality violations " << violations << ", zero gap "
            << zero_gap << ", exact greedy on zero gap " << exact << '\n';
  return violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and learned-heuristic inference for entity-relation structures"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("-c,--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);

  // Every configuration key is also a flag (underscores become dashes).
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  for (const auto& [key, def] : RunConfig::defaults()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (def == "true" || def == "false") {
      const std::string help = "sets " + key + " = true";
      flag_options[key] = app.add_flag(flag, help);
    } else {
      flag_options[key] = app.add_option(flag, flag_values[key], key + " (default: " + def + ")");
    }
  }

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset and its manifest");
  auto* train_cmd = app.add_subcommand("train", "train the speedup heuristic against the exact solver");
  auto* eval_cmd = app.add_subcommand("eval", "compare inference methods on a dataset");
  auto* verify_cmd = app.add_subcommand("verify", "run the property suites");
  auto* dual_cmd = app.add_subcommand("dual", "Lagrangian dual report");
  for (auto* sub : {generate, train_cmd, eval_cmd, verify_cmd, dual_cmd}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config;
    if (!config_file.empty()) config.merge_file(config_file);
    config.merge_environment();
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() == 0) continue;
      const auto it = flag_values.find(key);
      config.set(key, it == flag_values.end() ? "true" : it->second);
    }
    const RunDir dir = open_run_dir(config, config_file);
    if (generate->parsed()) return cmd_generate(config, dir);
    if (train_cmd->parsed()) return cmd_train(config, dir);
    if (eval_cmd->parsed()) return cmd_eval(config, dir);
    if (verify_cmd->parsed()) return cmd_verify(config, dir);
    if (dual_cmd->parsed()) return cmd_dual(config, dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
