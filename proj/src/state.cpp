#include "nrflow/state.hpp"

#include <cmath>
#include <stdexcept>

#include "nrflow/constitutive.hpp"

namespace nrflow {

Problem Problem::make(const ModelParams& m, const Closures& c, const Grid& g) {
  if (m.N < 1 || m.N > kMaxSpecies) throw std::invalid_argument("Problem: species count out of range");
  if (!m.mu0.empty() && static_cast<int>(m.mu0.size()) != m.N) {
    throw std::invalid_argument("Problem: mu0 must have N entries");
  }
  Problem pb;
  pb.params = m;
  pb.closures = c;
  pb.grid = g;
  pb.phi.assign(static_cast<size_t>(g.num_cells()), c.porosity);
  pb.b = c.b(m.N);
  pb.z0.resize(static_cast<size_t>(m.N));
  for (int i = 0; i < m.N; ++i) pb.z0[static_cast<size_t>(i)] = m.mu0_at(i) / m.T0;
  return pb;
}

PhysicalFields compute_fields(const Problem& pb, const EntropyState& st) {
  const ModelParams& m = pb.params;
  const int N = m.N;
  const int nc = st.num_cells();
  if (nc != pb.num_cells() || st.N != N || static_cast<int>(st.z.size()) != nc * N ||
      static_cast<int>(st.S.size()) != nc) {
    throw std::invalid_argument("compute_fields: state does not match problem");
  }
  PhysicalFields pf;
  pf.N = N;
  const size_t n = static_cast<size_t>(nc);
  pf.rho.resize(n * static_cast<size_t>(N));
  pf.mu.resize(n * static_cast<size_t>(N));
  for (auto* v : {&pf.rho_total, &pf.T, &pf.p, &pf.rhoe, &pf.rhoeta, &pf.Ef, &pf.Es, &pf.etas, &pf.lambda}) {
    v->resize(n);
  }
  for (int c = 0; c < nc; ++c) {
    const size_t cu = static_cast<size_t>(c);
    SpeciesVec<double> z;
    for (int i = 0; i < N; ++i) z.push_back(st.z_at(c, i));
    const auto rho = densities_from_entropy_vars(m, z, st.w[cu], m.eps);
    const double T = std::exp(st.w[cu]);
    const auto mu = chemical_potentials(m, rho, T, m.eps);
    double rt = 0.0;
    for (int i = 0; i < N; ++i) {
      pf.rho[cu * static_cast<size_t>(N) + static_cast<size_t>(i)] = rho[static_cast<size_t>(i)];
      pf.mu[cu * static_cast<size_t>(N) + static_cast<size_t>(i)] = mu[static_cast<size_t>(i)];
      rt += rho[static_cast<size_t>(i)];
    }
    pf.rho_total[cu] = rt;
    pf.T[cu] = T;
    pf.p[cu] = pressure_total(m, rt, T, m.eps);
    pf.rhoe[cu] = internal_energy_total(m, rt, T, m.eps);
    pf.rhoeta[cu] = water_entropy(m, rho, T);
    pf.Ef[cu] = fluid_energy(m, pf.rhoe[cu], st.S[cu], m.eps);
    const auto [eta_s, e_s] = skeleton_entropy_energy(m, T, m.eps);
    pf.etas[cu] = eta_s;
    pf.Es[cu] = e_s;
    pf.lambda[cu] = mobility(m, pb.closures, st.S[cu], T);
  }
  pf.velocity.resize(pb.grid.faces().size());
  for (size_t f = 0; f < pb.grid.faces().size(); ++f) {
    const auto& fc = pb.grid.faces()[f];
    const size_t L = static_cast<size_t>(fc.left), R = static_cast<size_t>(fc.right);
    pf.velocity[f] = -m.K * 0.5 * (pf.lambda[L] + pf.lambda[R]) * (pf.p[R] - pf.p[L]) / fc.dist;
  }
  return pf;
}

EntropyState state_from_physical(const Problem& pb, const std::vector<double>& rho,
                                 const std::vector<double>& T, const std::vector<double>& S) {
  const int N = pb.N();
  const int nc = pb.num_cells();
  if (static_cast<int>(rho.size()) != nc * N || static_cast<int>(T.size()) != nc ||
      static_cast<int>(S.size()) != nc) {
    throw std::invalid_argument("state_from_physical: field sizes do not match the grid");
  }
  EntropyState st;
  st.N = N;
  st.z.resize(rho.size());
  st.w.resize(static_cast<size_t>(nc));
  st.S = S;
  for (int c = 0; c < nc; ++c) {
    const size_t cu = static_cast<size_t>(c);
    std::vector<double> r(rho.begin() + c * N, rho.begin() + (c + 1) * N);
    const auto mu = chemical_potentials(pb.params, r, T[cu], pb.params.eps);
    for (int i = 0; i < N; ++i) st.z[cu * static_cast<size_t>(N) + static_cast<size_t>(i)] = mu[static_cast<size_t>(i)] / T[cu];
    st.w[cu] = std::log(T[cu]);
  }
  return st;
}

Eigen::VectorXd pack_unknowns(const EntropyState& st) {
  const int N = st.N;
  const int nc = st.num_cells();
  Eigen::VectorXd x(nc * (N + 1));
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < N; ++i) x[c * (N + 1) + i] = st.z_at(c, i);
    x[c * (N + 1) + N] = st.w[static_cast<size_t>(c)];
  }
  return x;
}

void unpack_unknowns(const Eigen::VectorXd& x, EntropyState& st) {
  const int N = st.N;
  const int nc = static_cast<int>(x.size()) / (N + 1);
  st.z.resize(static_cast<size_t>(nc * N));
  st.w.resize(static_cast<size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < N; ++i) st.z[static_cast<size_t>(c * N + i)] = x[c * (N + 1) + i];
    st.w[static_cast<size_t>(c)] = x[c * (N + 1) + N];
  }
}

}  // namespace nrflow
