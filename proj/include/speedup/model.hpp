#pragma once

#include <concepts>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "speedup/errors.hpp"
#include "speedup/instance_io.hpp"
#include "speedup/sparse_vector.hpp"

namespace speedup {

/// Linear speedup heuristic h(v) = -w . phi(v).
struct SpeedupModel {
  SparseVector weights;
  long update_count = 0;
  std::vector<long> epoch_log;  // updates per epoch; sums to update_count
  std::string schema;

  double heuristic(const SparseVector& phi) const { return -weights.dot(phi); }
};

/// A feature space whose ids have stable printable names.
template <class S>
concept NamedFeatureSpace = requires(const S& s, FeatureId id, const std::string& name) {
  { s.schema() } -> std::convertible_to<std::string>;
  { s.feature_name(id) } -> std::convertible_to<std::string>;
  { s.feature_id(name) } -> std::same_as<std::optional<FeatureId>>;
};

inline constexpr const char* kModelMagic = "speedup-model";

// File layout:
//   speedup-model
//   schema <name>
//   update_count <n>
//   epochs <u1> <u2> ...
//   <feature-name>\t<weight>      (sorted by feature id)
template <NamedFeatureSpace Space>
void save_model(std::ostream& out, const SpeedupModel& model, const Space& space) {
  out << kModelMagic << '\n';
  out << "schema " << space.schema() << '\n';
  out << "update_count " << model.update_count << '\n';
  out << "epochs";
  for (long u : model.epoch_log) out << ' ' << u;
  out << '\n';
  for (const auto& [id, w] : model.weights.entries()) {
    out << space.feature_name(id) << '\t' << format_double(w) << '\n';
  }
}

template <NamedFeatureSpace Space>
SpeedupModel load_model(std::istream& in, const Space& space) {
  SpeedupModel model;
  std::string line;
  long line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  if (!next() || line != kModelMagic) throw ParseError("missing model header", line_no);
  if (!next() || line.rfind("schema ", 0) != 0) throw ParseError("missing schema line", line_no);
  model.schema = line.substr(7);
  if (model.schema != space.schema()) throw SchemaMismatch(space.schema(), model.schema);
  if (!next() || line.rfind("update_count ", 0) != 0) throw ParseError("missing update_count line", line_no);
  model.update_count = parse_long(line.substr(13), line_no);
  if (!next() || line.rfind("epochs", 0) != 0) throw ParseError("missing epochs line", line_no);
  {
    std::istringstream ss(line.substr(6));
    for (std::string tok; ss >> tok;) model.epoch_log.push_back(parse_long(tok, line_no));
  }
  while (next()) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("weight line must be name<TAB>weight", line_no);
    const auto id = space.feature_id(line.substr(0, tab));
    if (!id) throw ParseError("unknown feature '" + line.substr(0, tab) + "'", line_no);
    model.weights.set(*id, parse_double(line.substr(tab + 1), line_no));
  }
  return model;
}

template <NamedFeatureSpace Space>
void save_model_file(const std::filesystem::path& path, const SpeedupModel& model, const Space& space) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  save_model(out, model, space);
}

template <NamedFeatureSpace Space>
SpeedupModel load_model_file(const std::filesystem::path& path, const Space& space) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  return load_model(in, space);
}

}  // namespace speedup
