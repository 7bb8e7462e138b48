#pragma once

#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

#include "nrflow/config.hpp"
#include "nrflow/diagnostics.hpp"

namespace nrflow {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvariant = 1,
  kExitConfig = 2,
  kExitSolver = 3,
};

/// Outcome of one simulation, independent of any output files.
struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  long steps = 0;
  EntropyState final_state;
  std::vector<DiagnosticsRecord> records;
  std::vector<InvariantViolation> violations;
  int newton_iterations = 0;
  int fallback_steps = 0;  // steps that needed the sigma ladder or the fixed-point iteration
};

/// Tolerances for the invariant checks of a configured run.
InvariantTolerances run_tolerances(const RunConfig& cfg, const Problem& pb, const EntropyState& initial);

/// Runs the configured simulation. When `out_dir` is non-empty, writes
/// config.json, diagnostics.csv, steps.csv, field dumps and, on failure,
/// failure.json into it.
RunOutcome simulate(const RunConfig& cfg, const std::string& out_dir);

int cmd_run(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// One row of the sweep summary.
struct SweepPoint {
  double tau = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  std::string directory;
  int exit_code = kExitOk;
  std::string message;
  long steps = 0;
  double max_energy_residual = 0.0;
  double max_mass_residual = 0.0;
  double min_production = 0.0;
  double lyapunov_initial = 0.0;
  double lyapunov_final = 0.0;
  long lyapunov_increases = 0;
  int newton_iterations = 0;
  double error_l2 = -1.0;     // against the reference run, -1 when absent
  double order_pairwise = NAN;  // against the next larger tau with the same eps and delta
  EntropyState final_state;
};

/// Runs the sweep ladder in a worker pool and fills the summary. Adds a
/// reference run per (eps, delta) when sweep.reference_tau > 0. An empty
/// `out_dir` writes no files.
std::vector<SweepPoint> run_sweep(const RunConfig& cfg, const std::string& out_dir);

/// Least-squares slope of log(error) against log(tau) over the points that
/// share eps and delta with `points[k]`; NaN when fewer than two qualify.
double fitted_order(const std::vector<SweepPoint>& points, size_t k);

int cmd_sweep(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Prints the hypothesis report as JSON. Exit 0 when all checks pass.
int cmd_validate(const RunConfig& cfg, std::ostream& out);

/// Recomputes diagnostics from the field dumps in a run directory, writing
/// diagnostics_recomputed.csv. Step differences are only formed between dumps
/// of consecutive steps.
int cmd_diagnose(const std::string& run_dir, std::ostream& log);

/// L2 norm of the (rho, T, S) difference between two states.
double state_l2_distance(const Problem& pb, const EntropyState& a, const EntropyState& b);

}  // namespace nrflow
