#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrflow/hypotheses.hpp"
#include "nrflow/params.hpp"
#include "nrflow/scheme.hpp"
#include "nrflow/state.hpp"

namespace nrflow {

struct GridConfig {
  int dim = 1;
  int nx = 200;
  int ny = 1;
  double Lx = 1.0;
  double Ly = 1.0;

  Grid make() const;
};

/// Initial data. `constant` uses the base values, `gaussian_bump` adds
/// amplitude * exp(-|x - center|^2 / (2 width^2)) to each base value, and
/// `file` reads a field CSV written by the run command.
struct InitialConfig {
  std::string kind = "gaussian_bump";
  std::vector<double> rho{0.3, 0.2};  // per species
  double T = 1.0;
  double S = 0.6;
  std::vector<double> rho_amplitude{0.2, 0.0};
  double T_amplitude = 0.3;
  double S_amplitude = 0.1;
  std::vector<double> center{0.5, 0.5};
  double width = 0.1;
  double noise = 0.0;  // relative multiplicative noise, drawn from the run seed
  std::string file;
};

struct OutputConfig {
  std::string directory = "out";
  int cadence = 0;  // field dump every `cadence` steps; 0 dumps only the first and last state
  std::vector<std::string> formats{"csv"};
  bool diagnostics = true;
};

/// Parameter ladder. `cartesian` runs every combination; `nested` runs
/// delta, then tau, then eps from the innermost loop outward.
struct SweepConfig {
  std::string mode = "cartesian";
  std::vector<double> tau;
  std::vector<double> eps;
  std::vector<double> delta;
  double reference_tau = 0.0;  // > 0 adds a reference run and error/order columns
  int workers = 0;             // 0 means hardware concurrency
};

struct RunConfig {
  ModelParams model;
  Closures closures;
  GridConfig grid;
  SchemeConfig scheme;
  InitialConfig initial;
  OutputConfig output;
  SweepConfig sweep;
  double horizon = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;  // > 1 selects the OpenMP kernels
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a JSON document, applies defaults and validates. An empty document
/// yields the default configuration. Unknown keys, malformed JSON (reported
/// with line and column) and failed hypotheses all throw ConfigError.
/// With `validate = false` only the structural errors throw.
RunConfig parse_config(const std::string& text, bool validate = true);
RunConfig load_config(const std::string& path, bool validate = true);

/// Canonical JSON form with every key present.
std::string serialize_config(const RunConfig& cfg);

/// Hypothesis report extended by grid, initial, output, solver, sweep and run
/// checks. Throws ConfigError only when N is out of range.
HypothesisReport validate_config(const RunConfig& cfg);

Problem make_problem(const RunConfig& cfg);

/// Physical initial fields for the configured initial block.
InitialFields make_initial_fields(const RunConfig& cfg, const Problem& pb);

}  // namespace nrflow
