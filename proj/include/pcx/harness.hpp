#pragma once

#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "pcx/minimax.hpp"
#include "pcx/simulate.hpp"

namespace pcx {

/// Parsed and validated experiment description.  Module preconditions are
/// checked at parse time so bad configs fail before any computation starts.
struct ExperimentConfig {
  std::string command;  // estimate | estimate-finite | saddle | minimax | validate
  IncrementParams params;
  int N = 0;
  CoefficientFunction a;
  SpectralDensityModel density;
  QuadratureGrid grid{4096};

  std::optional<DensityClassSpec> class_spec;

  int n_paths = 10000;
  std::uint64_t seed = 0;
  int window = 200;
  int spectral_grid = 0;
  bool dump_sequences = false;

  double power_bound = 1.0;
  int saddle_steps = 20000;
  int n_probes = 100;

  nlohmann::json raw;  // config echo for the manifest

  ExtrapolationProblem problem() const;
};

ExperimentConfig parse_config_json(const nlohmann::json& j, const std::string& source);
ExperimentConfig parse_config_file(const std::string& path);

/// Deterministic artifact payloads (file name -> bytes), manifest excluded.
std::map<std::string, std::string> build_artifacts(const ExperimentConfig& cfg, int threads,
                                                   int* exit_code);

/// Write artifacts plus manifest.json under out_dir; returns the process exit
/// code (0 ok, 2 validation/certification failure).
int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

}  // namespace pcx
