#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lkl/target_family.hpp"

namespace lkl::cli {

// Invalid configuration; `path` locates the offending key, e.g.
// "family.schedule.kind".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct FamilySpec {
  std::string kind;  // "gaussian-path" | "gaussian-mixture-path"
  FamilyPtr family;
  // Set for gaussian-path; the oracle needs the closed-form parameters.
  std::shared_ptr<const GaussianPath> gaussian;
  bool flip_score_sign = false;
};

struct InitialSpec {
  std::vector<double> mean;
  double variance = 1.0;
};

struct SolverSpec {
  std::size_t cells = 1024;
  double padding_sigmas = 8.0;
  std::optional<double> dt;  // unset: automatic
  double safety = 0.9;
  std::size_t cell_budget = std::size_t{1} << 22;
};

struct SimulationSpec {
  std::size_t particles = 10000;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double diffusion_coefficient = 2.0;
  std::size_t workers = 1;
  bool compare_grid = true;
  std::size_t histogram_coarsen = 16;
  bool snapshots = true;
};

struct EnvelopeSpec {
  double c1 = 1.0;
  double c2 = 0.4;
};

struct DiagnosticsSpec {
  std::vector<double> checkpoints;
  double tolerance = 5e-3;
  std::optional<EnvelopeSpec> envelope;
};

struct OracleSpec {
  double dt_ode = 1e-4;
  double chain_rule_tolerance = 1e-10;
  double fd_tolerance = 1e-5;
};

struct AssumptionsSpec {
  double box_half_width = 5.0;
  std::vector<double> times;
  double target_a = 1.0;
  std::optional<double> b_max;
  std::size_t lattice_per_axis = 32;
  std::size_t random_probes = 1000;
  std::uint64_t seed = 20250101;
  std::size_t workers = 1;
};

struct OutputSpec {
  std::string directory = "lkl_out";
  bool csv = true;
  bool plots = true;
  std::string format = "csv";  // snapshot format: csv | binary
};

struct ExperimentConfig {
  std::string name;
  FamilySpec family;
  double t0 = 0.0;
  double t1 = 1.0;
  InitialSpec initial;
  SolverSpec solver;
  SimulationSpec simulation;
  DiagnosticsSpec diagnostics;
  OracleSpec oracle;
  AssumptionsSpec assumptions;
  OutputSpec output;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace lkl::cli
