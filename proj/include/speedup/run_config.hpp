#pragma once

// Plain-text key=value run configuration. Later sources override earlier
// ones: built-in defaults, then a config file, then environment variables,
// then command-line flags.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "speedup/errors.hpp"
#include "speedup/instance_io.hpp"

namespace speedup {

class RunConfig {
  template <class Parse>
  static auto typed(const std::string& key, Parse parse) -> decltype(parse()) {
    try {
      return parse();
    } catch (const ParseError& e) {
      const std::string what = e.what();
      throw std::invalid_argument("key '" + key + "': " + what.substr(what.find(": ") + 2));
    }
  }

 public:
  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d{
        {"out", "run"},
        {"dataset", ""},
        {"model", ""},
        {"count", "1000"},
        {"entities", "2,3"},
        {"profile", "hard"},
        {"seed", "1"},
        {"separable", "false"},
        {"margin_target", "0.5"},
        {"widths", "1,2"},
        {"thetas", "0,0.25,0.5"},
        {"train_width", "1"},
        {"epochs", "5"},
        {"repeat", "5"},
        {"workers", "1"},
        {"latency_us", "0"},
        {"f1_include_null", "false"},
        {"max_iters", "2000"},
        {"tol", "1e-9"},
        {"eta0", "1"},
        {"solver_budget", "5000000"},
        {"verify_solver_instances", "200"},
        {"verify_beam_sets", "10000"},
        {"verify_dual_instances", "100"},
        {"verify_planted_instances", "200"},
    };
    return d;
  }

  /// Environment variables and the key each one overrides.
  static const std::map<std::string, std::string>& environment_keys() {
    static const std::map<std::string, std::string> e{{"SPEEDUP_SEED", "seed"}, {"SPEEDUP_WORKERS", "workers"}};
    return e;
  }

  RunConfig() : values_(defaults()) {}

  static bool known(const std::string& key) { return defaults().count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    if (!known(key)) throw std::invalid_argument("unknown configuration key '" + key + "'");
    values_[key] = value;
  }

  /// `key = value` lines; `#` starts a comment; blank lines are ignored.
  void merge_text(std::istream& in) {
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
      const std::string key = trim(body.substr(0, eq));
      if (!known(key)) throw ParseError("unknown configuration key '" + key + "'", line_no);
      values_[key] = trim(body.substr(eq + 1));
    }
  }

  void merge_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    merge_text(in);
  }

  void merge_environment() {
    for (const auto& [var, key] : environment_keys()) {
      if (const char* v = std::getenv(var.c_str()); v && *v) values_[key] = v;
    }
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  long integer(const std::string& key) const {
    return typed(key, [&] { return parse_long(str(key), 0); });
  }

  double real(const std::string& key) const {
    return typed(key, [&] { return parse_double(str(key), 0); });
  }

  bool boolean(const std::string& key) const {
    const auto& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
    throw std::invalid_argument("key '" + key + "' expects a boolean, got '" + v + "'");
  }

  std::vector<long> integers(const std::string& key) const {
    std::vector<long> out;
    for (const auto& tok : split(str(key))) out.push_back(typed(key, [&] { return parse_long(tok, 0); }));
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split(str(key))) out.push_back(typed(key, [&] { return parse_double(tok, 0); }));
    return out;
  }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  void write(std::ostream& out) const {
    for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');) {
      tok = trim(tok);
      if (!tok.empty()) out.push_back(tok);
    }
    return out;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace speedup
