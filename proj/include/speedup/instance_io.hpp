#pragma once

// Line-oriented plain-text instance format, one record per instance:
//
//   K m
//   k arity label_1 .. label_n cost_1 .. cost_n     (K lines, k = 1..K)
//   sense rhs nnz k i coeff [k i coeff ...]         (m lines, sense in = <= >=)
//   gold k:i [k:i ...]                              (optional)
//   end
//
// Indices are 1-based. Reals use the shortest decimal form that parses back
// to the same double, so write(read(text)) reproduces text byte for byte.
// Label names are single tokens. Blank lines between records are ignored.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "speedup/errors.hpp"
#include "speedup/ilp_core.hpp"

namespace speedup {

inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& token, long line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("expected a real number, got '" + token + "'", line);
  }
  return value;
}

inline long parse_long(const std::string& token, long line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("expected an integer, got '" + token + "'", line);
  }
  return value;
}

inline void write_instance(std::ostream& out, const ProblemInstance& instance) {
  const int K = instance.num_variables();
  out << K << ' ' << instance.constraints().size() << '\n';
  for (int k = 0; k < K; ++k) {
    const auto& v = instance.variable(k);
    out << (k + 1) << ' ' << v.arity;
    for (const auto& name : v.label_names) out << ' ' << name;
    for (int i = 0; i < v.arity; ++i) out << ' ' << format_double(instance.oracle().peek(k, i));
    out << '\n';
  }
  for (const auto& row : instance.constraints().rows()) {
    out << sense_symbol(row.sense) << ' ' << format_double(row.rhs) << ' ' << row.terms.size();
    for (const auto& t : row.terms) {
      out << ' ' << (t.var + 1) << ' ' << (t.label + 1) << ' ' << format_double(t.coeff);
    }
    out << '\n';
  }
  if (instance.gold()) {
    out << "gold";
    for (int k = 0; k < K; ++k) out << ' ' << (k + 1) << ':' << (instance.gold()->label(k) + 1);
    out << '\n';
  }
  out << "end\n";
}

inline void write_instances(std::ostream& out, std::span<const ProblemInstance> instances) {
  for (const auto& inst : instances) write_instance(out, inst);
}

namespace detail {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-blank line split into tokens; false at end of stream.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::istringstream ss(line);
      tokens.clear();
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  long line() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  long line_no_ = 0;
};

inline Sense parse_sense(const std::string& token, long line) {
  if (token == "=") return Sense::Equal;
  if (token == "<=") return Sense::LessEqual;
  if (token == ">=") return Sense::GreaterEqual;
  throw ParseError("unknown constraint sense '" + token + "'", line);
}

}  // namespace detail

inline std::vector<ProblemInstance> read_instances(std::istream& in) {
  std::vector<ProblemInstance> out;
  detail::LineReader reader(in);
  std::vector<std::string> tok;
  auto require = [&](const char* what) {
    if (!reader.next(tok)) throw ParseError(std::string("unexpected end of input, expected ") + what, reader.line());
  };

  while (reader.next(tok)) {
    if (tok.size() != 2) throw ParseError("record header must be 'K m'", reader.line());
    const long K = parse_long(tok[0], reader.line());
    const long m = parse_long(tok[1], reader.line());
    if (K < 1 || m < 0) throw ParseError("invalid record header", reader.line());

    std::vector<VariableSpec> vars;
    std::vector<std::vector<double>> costs;
    for (long k = 0; k < K; ++k) {
      require("a variable line");
      if (tok.size() < 2 || parse_long(tok[0], reader.line()) != k + 1) {
        throw ParseError("variable lines must be numbered 1..K in order", reader.line());
      }
      const long arity = parse_long(tok[1], reader.line());
      if (arity < 1 || tok.size() != static_cast<std::size_t>(2 + 2 * arity)) {
        throw ParseError("variable line must carry arity names and arity costs", reader.line());
      }
      VariableSpec spec;
      spec.arity = static_cast<int>(arity);
      std::vector<double> c;
      for (long i = 0; i < arity; ++i) spec.label_names.push_back(tok[static_cast<std::size_t>(2 + i)]);
      for (long i = 0; i < arity; ++i) c.push_back(parse_double(tok[static_cast<std::size_t>(2 + arity + i)], reader.line()));
      vars.push_back(std::move(spec));
      costs.push_back(std::move(c));
    }

    ConstraintSystem cs;
    for (long j = 0; j < m; ++j) {
      require("a constraint row");
      if (tok.size() < 3) throw ParseError("constraint row must be 'sense rhs nnz ...'", reader.line());
      ConstraintRow row;
      row.sense = detail::parse_sense(tok[0], reader.line());
      row.rhs = parse_double(tok[1], reader.line());
      const long nnz = parse_long(tok[2], reader.line());
      if (nnz < 0 || tok.size() != static_cast<std::size_t>(3 + 3 * nnz)) {
        throw ParseError("constraint row term count mismatch", reader.line());
      }
      for (long t = 0; t < nnz; ++t) {
        const auto base = static_cast<std::size_t>(3 + 3 * t);
        const long k = parse_long(tok[base], reader.line());
        const long i = parse_long(tok[base + 1], reader.line());
        if (k < 1 || k > K || i < 1 || i > vars[static_cast<std::size_t>(k - 1)].arity) {
          throw ParseError("constraint term references an invalid indicator", reader.line());
        }
        row.terms.push_back({static_cast<int>(k - 1), static_cast<int>(i - 1), parse_double(tok[base + 2], reader.line())});
      }
      cs.add_row(std::move(row));
    }

    std::optional<Assignment> gold;
    require("'gold' or 'end'");
    if (tok[0] == "gold") {
      Assignment g(static_cast<std::size_t>(K));
      for (std::size_t t = 1; t < tok.size(); ++t) {
        const auto colon = tok[t].find(':');
        if (colon == std::string::npos) throw ParseError("gold entries must be k:i", reader.line());
        const long k = parse_long(tok[t].substr(0, colon), reader.line());
        const long i = parse_long(tok[t].substr(colon + 1), reader.line());
        if (k < 1 || k > K || i < 1 || i > vars[static_cast<std::size_t>(k - 1)].arity) {
          throw ParseError("gold entry out of range", reader.line());
        }
        g.assign(static_cast<int>(k - 1), static_cast<int>(i - 1));
      }
      if (!g.complete()) throw ParseError("gold must assign every variable", reader.line());
      gold = std::move(g);
      require("'end'");
    }
    if (tok.size() != 1 || tok[0] != "end") throw ParseError("expected 'end'", reader.line());

    out.emplace_back(std::move(vars), std::move(cs), CostOracle::from_table(std::move(costs)), std::move(gold));
  }
  return out;
}

inline std::vector<ProblemInstance> read_instances_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file " + path.string());
  return read_instances(in);
}

inline void write_instances_file(const std::filesystem::path& path, std::span<const ProblemInstance> instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write instance file " + path.string());
  write_instances(out, instances);
}

}  // namespace speedup
