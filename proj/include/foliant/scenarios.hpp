#pragma once

// Named end-to-end experiments driven by JSON configs. Shared by the command-line
// runner and the acceptance binary.

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "foliant/dirac.hpp"
#include "foliant/geometry.hpp"

namespace foliant {

struct ExperimentConfig {
  std::string scenario;
  ModelGeometry geometry;
  BundleData bundle;
  int leaf_cutoff = 1;
  double trans_cutoff = 16;
  std::vector<double> times{1.0};
  std::vector<double> lambdas;
  std::uint64_t seed = 1;
  std::string output;     // default output directory
  nlohmann::json params;  // scenario-specific settings
  nlohmann::json source;  // the document as read
};

/// ConfigInvalid on malformed input, unknown scenario or violated constraints
/// (e.g. the Dirac scenarios need q = 2).
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Geometry block: {"p", "q", "g_F", "g_B", "A"}; metrics are a matrix of trig polynomials
/// or {"base": matrix, "log_scale": trig polynomial}. Missing entries default to I, I, 0.
ModelGeometry geometry_from_json(const nlohmann::json& j);
/// Bundle block: {"rank", "connection": [terms per y-direction]} with
/// B_k = i sum (cos(m.y) H_c + sin(m.y) H_s) for Hermitian H_c, H_s.
BundleData bundle_from_json(const nlohmann::json& j, int q);

struct ScenarioInfo {
  std::string name;
  std::string dims;
  std::string runtime;
  std::string summary;
};
const std::vector<ScenarioInfo>& scenario_catalog();

struct CheckResult {
  std::string name;
  double value = 0;
  std::string relation;  // "<=" or ">="
  double threshold = 0;
  bool pass = false;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct ScenarioResult {
  std::string scenario;
  std::string property;  // what the run checks, in words
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json details = nlohmann::json::object();
  std::vector<CheckResult> checks;
  std::map<std::string, CsvTable> tables;                  // file name -> table
  std::vector<std::pair<std::string, double>> timings;     // stage -> seconds

  void check(const std::string& name, double value, const std::string& relation, double threshold);
  bool passed() const;
  /// Deterministic report (no timings).
  nlohmann::json report() const;
};

/// Errors from the library propagate; failed checks are recorded, not thrown.
ScenarioResult run_scenario(const ExperimentConfig& cfg);

struct RunArtifacts {
  std::vector<std::pair<std::string, std::string>> files;  // name, fnv1a-64 checksum
};
/// Writes report.json, the CSV tables and run.json (checksums and timings) into dir.
RunArtifacts write_artifacts(const ScenarioResult& r, const std::string& dir);

}  // namespace foliant
