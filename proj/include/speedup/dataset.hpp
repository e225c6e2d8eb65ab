#pragma once

// Dataset files plus their JSON sidecar manifest.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "speedup/er_planted.hpp"
#include "speedup/er_task.hpp"
#include "speedup/errors.hpp"
#include "speedup/instance_io.hpp"
#include "speedup/sparse_vector.hpp"

namespace speedup {

inline constexpr const char* kDatasetSchema = "speedup-dataset-v1";

struct SeparabilityCertificate {
  double margin_target = 0.0;
  double certified_margin = 0.0;
  double entity_cost_margin = 0.0;
  std::vector<std::string> type_pool;
  SparseVector direction;  // ids in the er-v1 feature space
};

struct DatasetManifest {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<int> entities;
  std::optional<er::DifficultyProfile> profile;  // absent for separable sets
  std::optional<SeparabilityCertificate> certificate;
};

inline std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".manifest.json");
}

inline nlohmann::ordered_json manifest_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["schema"] = kDatasetSchema;
  j["count"] = m.count;
  j["seed"] = m.seed;
  j["entities"] = m.entities;
  if (m.profile) {
    const auto& p = *m.profile;
    j["profile"] = {{"name", p.name},
                    {"entity_margin", p.entity_margin},
                    {"relation_margin", p.relation_margin},
                    {"noise", p.noise},
                    {"relation_rate", p.relation_rate},
                    {"entity_tension", p.entity_tension},
                    {"relation_tension", p.relation_tension},
                    {"target_greedy_validity", p.target_greedy_validity}};
  } else {
    j["profile"] = nullptr;
  }
  j["separable"] = m.certificate.has_value();
  if (m.certificate) {
    const auto& c = *m.certificate;
    const er::ERFeatureExtractor names;
    nlohmann::ordered_json dir = nlohmann::ordered_json::object();
    for (const auto& [id, w] : c.direction.entries()) dir[names.feature_name(id)] = w;
    j["certificate"] = {{"margin_target", c.margin_target},
                        {"certified_margin", c.certified_margin},
                        {"entity_cost_margin", c.entity_cost_margin},
                        {"type_pool", c.type_pool},
                        {"direction", dir}};
  }
  return j;
}

inline DatasetManifest parse_manifest(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != kDatasetSchema) {
    throw SchemaMismatch(kDatasetSchema, j.value("schema", std::string("<none>")));
  }
  DatasetManifest m;
  m.count = j.at("count").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.entities = j.at("entities").get<std::vector<int>>();
  if (!j.at("profile").is_null()) {
    const auto& p = j.at("profile");
    m.profile = er::DifficultyProfile{p.at("name").get<std::string>(),
                                      p.at("entity_margin").get<double>(),
                                      p.at("relation_margin").get<double>(),
                                      p.at("noise").get<double>(),
                                      p.at("relation_rate").get<double>(),
                                      p.at("entity_tension").get<double>(),
                                      p.at("relation_tension").get<double>(),
                                      p.at("target_greedy_validity").get<double>()};
  }
  if (j.contains("certificate")) {
    const auto& c = j.at("certificate");
    SeparabilityCertificate cert;
    cert.margin_target = c.at("margin_target").get<double>();
    cert.certified_margin = c.at("certified_margin").get<double>();
    cert.entity_cost_margin = c.at("entity_cost_margin").get<double>();
    cert.type_pool = c.at("type_pool").get<std::vector<std::string>>();
    const er::ERFeatureExtractor names;
    for (const auto& [name, w] : c.at("direction").items()) {
      const auto id = names.feature_id(name);
      if (!id) throw std::invalid_argument("manifest direction names unknown feature '" + name + "'");
      cert.direction.set(*id, w.get<double>());
    }
    m.certificate = std::move(cert);
  }
  return m;
}

inline void write_manifest_file(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << manifest_json(m).dump(2) << '\n';
}

inline std::optional<DatasetManifest> read_manifest_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  return parse_manifest(nlohmann::json::parse(in));
}

inline SeparabilityCertificate certificate_of(const er::PlantedSet& set, double margin_target) {
  SeparabilityCertificate c;
  c.margin_target = margin_target;
  c.certified_margin = set.certified_margin;
  c.entity_cost_margin = set.entity_cost_margin;
  for (int t : set.type_pool) c.type_pool.emplace_back(er::schema().entity_labels[static_cast<std::size_t>(t)]);
  c.direction = set.direction;
  return c;
}

}  // namespace speedup
