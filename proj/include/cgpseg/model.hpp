#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cgpseg/endpoints.hpp"
#include "cgpseg/error.hpp"
#include "cgpseg/genotype.hpp"
#include "cgpseg/graph.hpp"
#include "cgpseg/library.hpp"
#include "cgpseg/metrics.hpp"
#include "cgpseg/preprocess.hpp"

namespace cgpseg {

inline constexpr const char* kModelFormat = "cgpseg-model";
inline constexpr int kModelVersion = 1;

struct Provenance {
  std::uint64_t seed = 0;
  int generations = 0;
  double train_error = 1.0;
  nlohmann::json config;  // run configuration that produced the model, when known

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Deployable pipeline: genotype plus every fixed stage around it.
struct PipelineModel {
  Genotype genotype;
  std::string library_id;
  std::string library_hash;
  PreprocessingSpec preprocessing;
  std::string aggregation = "mean";
  EndpointSpec endpoint;
  FitnessSpec fitness;
  Provenance provenance;

  friend bool operator==(const PipelineModel&, const PipelineModel&) = default;
};

inline void check_library(const PipelineModel& m, const FunctionLibrary& lib) {
  if (m.library_hash != lib.hash())
    throw Error(ErrorKind::hash_mismatch, "model was trained with library '" + m.library_id + "' (hash " + m.library_hash +
                                              "); refusing to run it with '" + lib.id() + "' (hash " + lib.hash() + ")");
}

/// Executes an already decoded graph: per-section execution, mean
/// aggregation, endpoint.
inline FinalOutput run_graph(const ActiveGraph& graph, const EndpointSpec& endpoint, const InputVector& input,
                             const FunctionLibrary& lib) {
  input.check();
  if (input.sections.size() == 1) return apply_endpoint(endpoint, execute(graph, input.sections.front(), lib));
  std::vector<IntermediateOutput> per_section;
  per_section.reserve(input.sections.size());
  for (const auto& section : input.sections) per_section.push_back(execute(graph, section, lib));
  return apply_endpoint(endpoint, aggregate(per_section));
}

/// Decodes once, then runs every section of `input` (already preprocessed).
inline FinalOutput run_model(const PipelineModel& model, const InputVector& input, const FunctionLibrary& lib) {
  check_library(model, lib);
  if (input.channel_count() != model.genotype.inputs)
    throw input_error("model expects " + std::to_string(model.genotype.inputs) + " channels, input has " +
                      std::to_string(input.channel_count()));
  return run_graph(decode(model.genotype, lib), model.endpoint, input, lib);
}

inline nlohmann::json provenance_json(const Provenance& p) {
  nlohmann::json j = {{"seed", p.seed}, {"generations", p.generations}, {"train_error", p.train_error}};
  if (!p.config.is_null()) j["config"] = p.config;
  return j;
}

inline nlohmann::json to_json(const PipelineModel& m, const FunctionLibrary& lib) {
  check_library(m, lib);
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"genotype", to_json(m.genotype, lib)},
          {"preprocessing", to_json(m.preprocessing)},
          {"aggregation", m.aggregation},
          {"endpoint", to_json(m.endpoint)},
          {"fitness", to_json(m.fitness)},
          {"provenance", provenance_json(m.provenance)}};
}

inline PipelineModel model_from_json(const nlohmann::json& j, const FunctionLibrary& lib) {
  try {
    if (j.value("format", std::string()) != kModelFormat) throw Error(ErrorKind::schema, "not a cgpseg model document");
    const int version = j.at("version").get<int>();
    if (version != kModelVersion)
      throw Error(ErrorKind::schema, "model schema version " + std::to_string(version) + " is not supported (expected " +
                                         std::to_string(kModelVersion) + ")");
    PipelineModel m;
    const auto& gj = j.at("genotype");
    m.library_id = gj.at("library_id").get<std::string>();
    m.library_hash = gj.at("library_hash").get<std::string>();
    m.genotype = genotype_from_json(gj, lib);
    m.preprocessing = preprocessing_from_json(j.at("preprocessing"));
    m.aggregation = j.value("aggregation", std::string("mean"));
    if (m.aggregation != "mean") throw Error(ErrorKind::schema, "unsupported aggregation '" + m.aggregation + "'");
    m.endpoint = endpoint_from_json(j.at("endpoint"));
    m.fitness = fitness_from_json(j.at("fitness"));
    const auto& p = j.at("provenance");
    m.provenance = {p.value("seed", std::uint64_t{0}), p.value("generations", 0), p.value("train_error", 1.0),
                    p.value("config", nlohmann::json())};
    if (m.genotype.outputs < m.endpoint.required_outputs())
      throw Error(ErrorKind::validity, "genotype has fewer outputs than the endpoint requires");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed model JSON: ") + e.what());
  }
}

inline void save_model(const PipelineModel& m, const std::filesystem::path& path, const FunctionLibrary& lib) {
  const auto doc = to_json(m, lib);
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::load, "cannot write model file " + path.string());
  out << doc.dump(2) << '\n';
}

inline PipelineModel load_model(const std::filesystem::path& path, const FunctionLibrary& lib) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::load, "cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, path.string() + ": " + e.what());
  }
  return model_from_json(j, lib);
}

}  // namespace cgpseg
