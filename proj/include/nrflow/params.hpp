#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <boost/container/static_vector.hpp>

namespace nrflow {

inline constexpr int kMaxSpecies = 8;

/// Fixed-capacity per-species vector used in the per-cell kernels.
template <class S>
using SpeciesVec = boost::container::static_vector<S, kMaxSpecies>;

/// Scalar constants and exponents of the model and of the approximate scheme.
struct ModelParams {
  int N = 2;
  double gamma = 3.0;
  double c_w = 1.0;
  double c_s = 1.0;
  double p_at = 2.0;
  double K = 1.0;      // absolute permeability
  double alpha = 1.0;  // Robin heat coefficient
  double T0 = 1.0;
  std::vector<double> mu0;  // boundary chemical potentials, empty means zeros

  double eps = 0.01;
  double delta = 0.0;
  double tau = 0.01;

  double K1 = 5.0;
  double K2 = 6.0;
  double K3 = 7.0;
  double a = 3.0;
  double alpha_r = 2.0;
  double beta = 4.0;
  double q = 1.5;
  double k_p = 2.0;
  double c_p = 1.0;

  double mu0_at(int i) const { return mu0.empty() ? 0.0 : mu0[static_cast<size_t>(i)]; }
};

/// Constants of the default closure family.
///
/// k_r(s) = clamp(s,0,1)^alpha_r, P_c(s) = c_p s^-k_p, f(s) = A + B log(1-s),
/// mu(T) = viscosity, kappa(T) = kappa1 (1 + T^beta), L~ = D Pi,
/// L~_i0 = c0 T rho_i / (1 + rho), r~ = -C1 |Pi zeta|^(a-2) Pi zeta,
/// b = b_scale Pi unless an explicit matrix is given, Phi constant.
struct Closures {
  double f_A = 4.0;
  double f_B = 1.0;
  double viscosity = 1.0;
  double kappa1 = 1.0;
  double D = 1.0;
  double c0 = 0.0;
  double C1 = 1.0;
  double b_scale = 0.0;
  std::optional<Eigen::MatrixXd> b_matrix;
  double porosity = 0.3;
  double s0 = 0.5;  // upper end of the interval defining lambda0

  Eigen::MatrixXd b(int N) const;
};

}  // namespace nrflow
