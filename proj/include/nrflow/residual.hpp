#pragma once

// Discrete residual of one implicit Euler step in entropy variables.
//
// Rows are per unit volume and multiplied by tau. Per cell the layout is
// [mass_1..mass_N, energy], matching the unknown layout [z_1..z_N, w]. The
// saturation is eliminated cell by cell through the algebraic update.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nrflow/dual.hpp"
#include "nrflow/operators.hpp"
#include "nrflow/state.hpp"

namespace nrflow {

/// Data of the previous time level entering the time differences.
struct StepContext {
  std::vector<double> S_prev;
  std::vector<double> rhoS_prev;  // S rho_i, cell-major
  std::vector<double> Ef_prev;
  std::vector<double> Es_prev;

  static StepContext make(const Problem& pb, const EntropyState& prev);
};

/// Per-cell and per-face intermediate quantities of the physical part.
template <class S>
struct PhysicalTerms {
  std::vector<S> rho;       // cell-major
  std::vector<S> T;
  std::vector<S> p;
  std::vector<S> sat;
  std::vector<S> velocity;  // faces
  std::vector<S> mass_flux; // faces x N (face-major)
  std::vector<S> heat_flux; // faces, total energy flux
};

/// Physical part: the braces multiplied by sigma in the homotopy. Writes the
/// per-cell rows into `out` (overwriting) and the intermediates into `terms`.
template <class S>
void assemble_physical(const Problem& pb, const StepContext& ctx, const std::vector<S>& x, double sigma,
                       Exec ex, std::vector<S>& out, PhysicalTerms<S>* terms = nullptr);

/// Regularizer part evaluated with coefficient temperature `Tcoef`, added into `out`.
template <class S>
void add_regularizer(const Problem& pb, const std::vector<S>& x, const std::vector<S>& Tcoef, Exec ex,
                     std::vector<S>& out);

/// Full residual sigma * physical + regularizer. Optionally returns the
/// eliminated saturation.
template <class S>
void assemble_residual(const Problem& pb, const StepContext& ctx, const std::vector<S>& x, double sigma,
                       Exec ex, std::vector<S>& out, std::vector<S>* sat = nullptr);

Eigen::VectorXd residual(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x,
                         double sigma, Exec ex = Exec::Serial);

/// Jacobian of the full residual by coloured forward-mode differentiation.
Eigen::SparseMatrix<double> jacobian(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x,
                                     double sigma, Exec ex = Exec::Serial);

/// Jacobian of the regularizer part with frozen coefficient temperature.
Eigen::SparseMatrix<double> regularizer_jacobian(const Problem& pb, const Eigen::VectorXd& x,
                                                 const std::vector<double>& Tcoef, Exec ex = Exec::Serial);

/// Mass rows (cells x N, cell-major) of the full residual at sigma = 1.
std::vector<double> assemble_mass_residual(const Problem& pb, const EntropyState& state_k,
                                           const EntropyState& state_km1);
/// Energy rows (one per cell) of the full residual at sigma = 1.
std::vector<double> assemble_energy_residual(const Problem& pb, const EntropyState& state_k,
                                             const EntropyState& state_km1);

/// Stencil radius of the residual in cells (2 when the bi-Laplacian is on).
int stencil_radius(const Problem& pb);

}  // namespace nrflow
