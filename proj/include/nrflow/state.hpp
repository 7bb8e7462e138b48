#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nrflow/grid.hpp"
#include "nrflow/params.hpp"

namespace nrflow {

/// Primal unknowns per cell: z = mu/T (N entries, cell-major), w = log T, and S.
struct EntropyState {
  int N = 1;
  std::vector<double> z;
  std::vector<double> w;
  std::vector<double> S;

  int num_cells() const { return static_cast<int>(w.size()); }
  double z_at(int c, int i) const { return z[static_cast<size_t>(c * N + i)]; }
};

/// Problem definition shared by every step: constants, closures, grid, porosity,
/// boundary matrix and boundary reference potentials mu0/T0.
struct Problem {
  ModelParams params;
  Closures closures;
  Grid grid;
  std::vector<double> phi;
  Eigen::MatrixXd b;
  std::vector<double> z0;

  static Problem make(const ModelParams& m, const Closures& c, const Grid& g);
  int N() const { return params.N; }
  int num_cells() const { return grid.num_cells(); }
  int unknowns_per_cell() const { return params.N + 1; }
};

/// Fields derived from an EntropyState. Species-indexed arrays are cell-major.
struct PhysicalFields {
  int N = 1;
  std::vector<double> rho;
  std::vector<double> rho_total;
  std::vector<double> T;
  std::vector<double> p;
  std::vector<double> mu;
  std::vector<double> rhoe;
  std::vector<double> rhoeta;
  std::vector<double> Ef;    // regularized fluid energy E_f,eps
  std::vector<double> Es;    // regularized skeleton energy
  std::vector<double> etas;  // regularized skeleton entropy
  std::vector<double> lambda;
  std::vector<double> velocity;  // Darcy velocity on interior faces
};

PhysicalFields compute_fields(const Problem& pb, const EntropyState& st);

/// Entropy variables from physical data (rho cell-major, T, S), at the problem's eps.
EntropyState state_from_physical(const Problem& pb, const std::vector<double>& rho,
                                 const std::vector<double>& T, const std::vector<double>& S);

/// Unknown vector layout: per cell [z_1..z_N, w].
Eigen::VectorXd pack_unknowns(const EntropyState& st);
void unpack_unknowns(const Eigen::VectorXd& x, EntropyState& st);

}  // namespace nrflow
