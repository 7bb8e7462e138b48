#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nrflow/operators.hpp"
#include "nrflow/residual.hpp"
#include "nrflow/state.hpp"

namespace nrflow {

/// Solver controls. tau, eps and delta live in ModelParams.
struct SchemeConfig {
  double newton_tol = 1e-10;
  int max_newton = 30;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double min_step = 9.5367431640625e-07;  // 2^-20
  std::vector<double> homotopy_steps{0.0, 0.25, 0.5, 0.75, 1.0};
  int picard_max = 200;
  double picard_relax = 0.5;
  int polish = 2;
  Exec exec = Exec::Serial;
};

struct StepReport {
  int newton_iterations = 0;
  double final_residual = 0.0;
  bool homotopy_path_used = false;
  bool picard_used = false;
  double wallclock = 0.0;
  std::vector<double> residual_history;
};

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NewtonResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;  // max-norm residual per iterate
  std::string reason;
};

/// Damped Newton on the residual at fixed sigma, updating x in place.
NewtonResult newton_solve(const Problem& pb, const StepContext& ctx, Eigen::VectorXd& x, double sigma,
                          const SchemeConfig& cfg);

/// One damped Newton update with Armijo backtracking; throws StepFailure when
/// the line search cannot decrease the residual.
Eigen::VectorXd newton_step(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x, double sigma,
                            const SchemeConfig& cfg);

/// Relative mismatch between J v and a central difference of the residual along v.
double jacobian_fd_mismatch(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x, double sigma,
                            const Eigen::VectorXd& v, double h = 1e-6);

/// Fixed-point iteration on the linearized problem with physical terms frozen
/// at the previous iterate, relaxed by cfg.picard_relax. Contracts only when
/// tau eps (or tau delta) dominates the physical terms; leaves x at the best
/// iterate seen.
NewtonResult picard_solve(const Problem& pb, const StepContext& ctx, Eigen::VectorXd& x, const SchemeConfig& cfg);

/// One implicit Euler step. Tries Newton from the previous state, then the
/// sigma ladder, then the Picard fallback.
EntropyState time_step(const Problem& pb, const EntropyState& prev, const SchemeConfig& cfg,
                       StepReport* report = nullptr);

/// The saturation belonging to unknowns x (eliminated cell by cell).
std::vector<double> eliminated_saturation(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x);

/// Physical initial data: rho cell-major (N per cell), T and S per cell.
struct InitialFields {
  std::vector<double> rho;
  std::vector<double> T;
  std::vector<double> S;
};

/// Entropy-variable initial state with S truncated to [eps, 1 - eps].
EntropyState initial_state(const Problem& pb, InitialFields init);

/// Number of implicit Euler steps covering the horizon.
long step_count(double horizon, double tau);

struct StepEvent {
  long step = 0;
  double time = 0.0;
  const EntropyState* state = nullptr;
  const EntropyState* previous = nullptr;  // null for the initial snapshot
  const StepReport* report = nullptr;      // null for the initial snapshot
};

/// Advances step_count(horizon, tau) steps, invoking `observer` for the
/// initial snapshot and after each accepted step. Returns the final state.
EntropyState run_simulation(const Problem& pb, const EntropyState& initial, const SchemeConfig& cfg,
                            double horizon, const std::function<void(const StepEvent&)>& observer = {});

}  // namespace nrflow
