#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "nrflow/constitutive.hpp"
#include "nrflow/scheme.hpp"
#include "nrflow/state.hpp"

namespace nrflow::testing {

/// Smooth 1D bump: rho_1 and T carry a gaussian, S a smaller one.
inline InitialFields bump_fields(const Problem& pb, double amp = 1.0, double S0 = 0.6) {
  InitialFields in;
  const int N = pb.N();
  for (int c = 0; c < pb.num_cells(); ++c) {
    const auto x = pb.grid.center(c);
    double r2 = (x[0] - 0.5) * (x[0] - 0.5);
    if (pb.grid.dim() == 2) r2 += (x[1] - 0.5) * (x[1] - 0.5);
    const double g = std::exp(-r2 / (2 * 0.1 * 0.1));
    for (int i = 0; i < N; ++i) in.rho.push_back((i == 0 ? 0.3 + 0.2 * amp * g : 0.2));
    in.T.push_back(1.0 + 0.3 * amp * g);
    in.S.push_back(S0 + 0.1 * amp * g);
  }
  return in;
}

/// Uniform fields with a multiplicative random perturbation of relative size `noise`.
inline InitialFields noisy_fields(const Problem& pb, std::mt19937_64& rng, double noise) {
  std::uniform_real_distribution<double> u(-noise, noise);
  InitialFields in;
  for (int c = 0; c < pb.num_cells(); ++c) {
    for (int i = 0; i < pb.N(); ++i) in.rho.push_back(0.3 * (1 + u(rng)));
    in.T.push_back(1.0 + u(rng));
    in.S.push_back(0.6 * (1 + u(rng)));
  }
  return in;
}

/// Model with no boundary exchange: alpha = 0 and b = 0 (the default b).
inline ModelParams isolated_model() {
  ModelParams m;
  m.alpha = 0.0;
  return m;
}

/// Uniform rest state: z = 0, T = 1 and P_c(S) = -p, so that every term of
/// the step vanishes (requires mu0 = 0 and T0 = 1).
inline EntropyState equilibrium_state(const Problem& pb) {
  const ModelParams& m = pb.params;
  EntropyState st;
  st.N = pb.N();
  const size_t nc = static_cast<size_t>(pb.num_cells());
  st.z.assign(nc * static_cast<size_t>(st.N), 0.0);
  st.w.assign(nc, 0.0);
  std::vector<double> z(static_cast<size_t>(st.N), 0.0);
  const auto rho = densities_from_entropy_vars(m, z, 0.0, m.eps);
  double rt = 0.0;
  for (double r : rho) rt += r;
  const double p = pressure_total(m, rt, 1.0, m.eps);
  // P_c(S) = c_p S^-k_p
  st.S.assign(nc, std::pow(-p / m.c_p, -1.0 / m.k_p));
  return st;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace nrflow::testing
