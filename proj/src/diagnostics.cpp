#include "nrflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nrflow/constitutive.hpp"
#include "nrflow/operators.hpp"

namespace nrflow {

namespace {

size_t u(int i) { return static_cast<size_t>(i); }

double min_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

// Adds a face density (per unit face volume area*dist) half to each neighbour.
void split_face(const Grid& g, const InteriorFace& fc, double density, std::vector<double>& cell) {
  const double share = 0.5 * density * fc.area * fc.dist / g.cell_volume();
  cell[u(fc.left)] += share;
  cell[u(fc.right)] += share;
}

}  // namespace

std::vector<double> ProductionField::total() const {
  std::vector<double> t(darcy.size());
  for (size_t c = 0; c < t.size(); ++c) t[c] = darcy[c] + diffusion[c] + heat[c] + saturation[c] + reaction[c];
  return t;
}

double ProductionField::integral(double vol) const {
  double s = 0.0;
  for (double x : total()) s += x;
  return s * vol;
}

double ProductionField::min_term() const {
  return std::min({min_of(darcy), min_of(diffusion), min_of(heat), min_of(saturation), min_of(reaction)});
}

ProductionField entropy_production_field(const Problem& pb, const EntropyState& state_k,
                                         const EntropyState& state_km1) {
  const ModelParams& m = pb.params;
  const Closures& cl = pb.closures;
  const Grid& g = pb.grid;
  const int N = m.N;
  const int nc = g.num_cells();
  const auto fk = compute_fields(pb, state_k);

  ProductionField pf;
  for (auto* v : {&pf.darcy, &pf.diffusion, &pf.heat, &pf.saturation, &pf.reaction}) v->assign(u(nc), 0.0);

  for (const auto& fc : g.faces()) {
    const size_t L = u(fc.left), R = u(fc.right);
    const double lam = 0.5 * (fk.lambda[L] + fk.lambda[R]);
    const double bbar = 0.5 * (1.0 / fk.T[L] + 1.0 / fk.T[R]);
    const double gp = (fk.p[R] - fk.p[L]) / fc.dist;
    split_face(g, fc, m.K * lam * bbar * gp * gp, pf.darcy);

    std::vector<double> gz(u(N));
    for (int i = 0; i < N; ++i) gz[u(i)] = (state_k.z_at(fc.right, i) - state_k.z_at(fc.left, i)) / fc.dist;
    double pz2 = 0.0;
    for (double x : projector(gz)) pz2 += x * x;
    split_face(g, fc, cl.D * pz2, pf.diffusion);

    const double l00 = 0.5 * (onsager_heat(m, cl, fk.T[L]) + onsager_heat(m, cl, fk.T[R]));
    const double gb = (1.0 / fk.T[R] - 1.0 / fk.T[L]) / fc.dist;
    split_face(g, fc, l00 * gb * gb, pf.heat);
  }

  for (int c = 0; c < nc; ++c) {
    const size_t cu = u(c);
    const double dS = state_k.S[cu] - state_km1.S[cu];
    const double df = dyn_capillary(cl, state_k.S[cu]) - dyn_capillary(cl, state_km1.S[cu]);
    pf.saturation[cu] = -pb.phi[cu] * dS * df / (m.tau * m.tau * fk.T[cu]);

    SpeciesVec<double> z;
    for (int i = 0; i < N; ++i) z.push_back(state_k.z_at(c, i));
    const auto r = reaction_terms(m, cl, fk.rho_total[cu], fk.T[cu], z, m.eps);
    double acc = 0.0;
    for (int i = 0; i < N; ++i) acc -= r[u(i)] * z[u(i)];
    pf.reaction[cu] = acc;
  }
  return pf;
}

double total_entropy(const Problem& pb, const EntropyState& st) {
  const auto f = compute_fields(pb, st);
  double s = 0.0;
  for (int c = 0; c < pb.num_cells(); ++c) {
    const size_t cu = u(c);
    s += pb.phi[cu] * st.S[cu] * f.rhoeta[cu] + (1.0 - pb.phi[cu]) * f.etas[cu];
  }
  return s * pb.grid.cell_volume();
}

double total_energy(const Problem& pb, const EntropyState& st) {
  const auto f = compute_fields(pb, st);
  double s = 0.0;
  for (int c = 0; c < pb.num_cells(); ++c) {
    const size_t cu = u(c);
    s += pb.phi[cu] * f.Ef[cu] + (1.0 - pb.phi[cu]) * f.Es[cu];
  }
  return s * pb.grid.cell_volume();
}

double lyapunov(const Problem& pb, const EntropyState& st) {
  const auto f = compute_fields(pb, st);
  double s = 0.0;
  for (int c = 0; c < pb.num_cells(); ++c) {
    const size_t cu = u(c);
    s += pb.phi[cu] * (f.Ef[cu] - st.S[cu] * f.rhoeta[cu]) + (1.0 - pb.phi[cu]) * (f.Es[cu] - f.etas[cu]);
  }
  return s * pb.grid.cell_volume();
}

double boundary_entropy_flux(const Problem& pb, const EntropyState& st) {
  const ModelParams& m = pb.params;
  const int N = m.N;
  double s = 0.0;
  for (const auto& bf : pb.grid.boundary_faces()) {
    double species = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int l = 0; l < N; ++l) {
        species += st.z_at(bf.cell, i) * pb.b(i, l) * (st.z_at(bf.cell, l) - pb.z0[u(l)]);
      }
    }
    const double T = std::exp(st.w[u(bf.cell)]);
    s += bf.area * (species - m.alpha * (T - m.T0) / T);
  }
  return s;
}

double regularizer_entropy_term(const Problem& pb, const EntropyState& st) {
  const int N = pb.N();
  const Eigen::VectorXd x = pack_unknowns(st);
  std::vector<double> xv(x.data(), x.data() + x.size());
  std::vector<double> reg(xv.size(), 0.0);
  std::vector<double> T(st.w.size());
  for (size_t c = 0; c < T.size(); ++c) T[c] = std::exp(st.w[c]);
  add_regularizer(pb, xv, T, Exec::Serial, reg);
  double s = 0.0;
  for (int c = 0; c < pb.num_cells(); ++c) {
    for (int i = 0; i < N; ++i) s += st.z_at(c, i) * reg[u(c * (N + 1) + i)];
    s -= reg[u(c * (N + 1) + N)] / T[u(c)];
  }
  return s * pb.grid.cell_volume() / pb.params.tau;
}

double entropy_balance_residual(const Problem& pb, const EntropyState& state_k, const EntropyState& state_km1) {
  const double dH = (total_entropy(pb, state_k) - total_entropy(pb, state_km1)) / pb.params.tau;
  const double prod = entropy_production_field(pb, state_k, state_km1).integral(pb.grid.cell_volume());
  return dH - boundary_entropy_flux(pb, state_k) - prod - regularizer_entropy_term(pb, state_k);
}

double energy_budget(const Problem& pb, const EntropyState& state_k, const EntropyState& state_km1) {
  const ModelParams& m = pb.params;
  double robin = 0.0;
  for (const auto& bf : pb.grid.boundary_faces()) robin += bf.area * (std::exp(state_k.w[u(bf.cell)]) - m.T0);
  double reg = 0.0;
  for (double w : state_k.w) reg += (1.0 + std::exp(-m.K3 * w)) * w;
  reg *= pb.grid.cell_volume();
  return total_energy(pb, state_k) - total_energy(pb, state_km1) + m.tau * m.alpha * robin + m.tau * m.eps * reg;
}

std::vector<double> species_mass(const Problem& pb, const EntropyState& st) {
  const int N = pb.N();
  const auto f = compute_fields(pb, st);
  std::vector<double> out(u(N), 0.0);
  for (int c = 0; c < pb.num_cells(); ++c) {
    for (int i = 0; i < N; ++i) out[u(i)] += pb.phi[u(c)] * st.S[u(c)] * f.rho[u(c * N + i)];
  }
  for (auto& x : out) x *= pb.grid.cell_volume();
  return out;
}

std::vector<double> mass_budget(const Problem& pb, const EntropyState& state_k, const EntropyState& state_km1) {
  const ModelParams& m = pb.params;
  const int N = m.N;
  const double vol = pb.grid.cell_volume();
  const auto mk = species_mass(pb, state_k);
  const auto mkm1 = species_mass(pb, state_km1);
  const auto fk = compute_fields(pb, state_k);
  std::vector<double> out(u(N));
  for (int i = 0; i < N; ++i) out[u(i)] = mk[u(i)] - mkm1[u(i)];
  for (int c = 0; c < pb.num_cells(); ++c) {
    SpeciesVec<double> z;
    for (int i = 0; i < N; ++i) z.push_back(state_k.z_at(c, i));
    const auto r = reaction_terms(m, pb.closures, fk.rho_total[u(c)], fk.T[u(c)], z, m.eps);
    for (int i = 0; i < N; ++i) out[u(i)] += m.tau * vol * (m.eps * z[u(i)] - r[u(i)]);
  }
  for (const auto& bf : pb.grid.boundary_faces()) {
    for (int i = 0; i < N; ++i) {
      double acc = 0.0;
      for (int l = 0; l < N; ++l) acc += pb.b(i, l) * (state_k.z_at(bf.cell, l) - pb.z0[u(l)]);
      out[u(i)] += m.tau * bf.area * acc;
    }
  }
  return out;
}

std::vector<std::pair<std::string, double>> state_monitors(const Problem& pb, const EntropyState& st) {
  const ModelParams& m = pb.params;
  const Closures& cl = pb.closures;
  const Grid& g = pb.grid;
  const int N = m.N;
  const double vol = g.cell_volume();
  const auto f = compute_fields(pb, st);

  double pc1 = 0, p1 = 0, rg = 0, srg = 0, t1 = 0, w2 = 0, tb2 = 0, pz2 = 0, fq = 0;
  std::vector<double> tb(st.w.size()), fs(st.w.size());
  for (int c = 0; c < pb.num_cells(); ++c) {
    const size_t cu = u(c);
    pc1 += std::abs(capillary_pressure_reg(m, st.S[cu], m.eps));
    p1 += std::abs(f.p[cu]);
    const double rgam = std::pow(f.rho_total[cu], m.gamma);
    rg += rgam;
    srg += st.S[cu] * rgam;
    t1 += f.T[cu];
    w2 += st.w[cu] * st.w[cu];
    tb[cu] = std::pow(f.T[cu], 0.5 * m.beta);
    tb2 += tb[cu] * tb[cu];
    std::vector<double> z(u(N));
    for (int i = 0; i < N; ++i) z[u(i)] = st.z_at(c, i);
    for (double x : projector(z)) pz2 += x * x;
    fs[cu] = dyn_capillary(cl, st.S[cu]);
    fq += std::pow(std::abs(fs[cu]), m.q);
  }
  double gw2 = 0, gtb2 = 0, gpz2 = 0, gp2 = 0, gfq = 0;
  for (const auto& fc : g.faces()) {
    const size_t L = u(fc.left), R = u(fc.right);
    const double fv = fc.area * fc.dist;
    const double dw = (st.w[R] - st.w[L]) / fc.dist;
    gw2 += fv * dw * dw;
    const double dtb = (tb[R] - tb[L]) / fc.dist;
    gtb2 += fv * dtb * dtb;
    std::vector<double> dz(u(N));
    for (int i = 0; i < N; ++i) dz[u(i)] = (st.z_at(fc.right, i) - st.z_at(fc.left, i)) / fc.dist;
    for (double x : projector(dz)) gpz2 += fv * x * x;
    const double lam = 0.5 * (f.lambda[L] + f.lambda[R]);
    const double bbar = 0.5 * (1.0 / f.T[L] + 1.0 / f.T[R]);
    const double dp = (f.p[R] - f.p[L]) / fc.dist;
    gp2 += fv * lam * bbar * dp * dp;
    gfq += fv * std::pow(std::abs((fs[R] - fs[L]) / fc.dist), m.q);
  }
  return {
      {"Pc_L1", pc1 * vol},
      {"p_L1", p1 * vol},
      {"rho_Lgamma", std::pow(rg * vol, 1.0 / m.gamma)},
      {"S_rho_Lgamma", std::pow(srg * vol, 1.0 / m.gamma)},
      {"energy_total", total_energy(pb, st)},
      {"T_L1", t1 * vol},
      {"logT_H1sq", w2 * vol + gw2},
      {"Tbeta_H1sq", tb2 * vol + gtb2},
      {"PiZ_H1sq", pz2 * vol + gpz2},
      {"gradp_weighted_sq", gp2},
      {"fS_W1q", std::pow(fq * vol + gfq, 1.0 / m.q)},
  };
}

std::vector<std::pair<std::string, double>> apriori_monitors(
    const std::vector<std::vector<std::pair<std::string, double>>>& per_step, double tau) {
  std::vector<std::pair<std::string, double>> out;
  if (per_step.empty()) return out;
  for (size_t k = 0; k < per_step.front().size(); ++k) {
    const std::string& name = per_step.front()[k].first;
    const bool integrated = name.find("H1sq") != std::string::npos || name == "gradp_weighted_sq";
    double acc = integrated ? 0.0 : -std::numeric_limits<double>::infinity();
    for (size_t s = 0; s < per_step.size(); ++s) {
      const double v = per_step[s][k].second;
      if (integrated) {
        if (s > 0) acc += tau * v;
      } else {
        acc = std::max(acc, v);
      }
    }
    out.emplace_back(integrated ? name + "_time_integral" : name + "_sup", acc);
  }
  return out;
}

GibbsDuhemAudit gibbs_duhem_audit(const Problem& pb, const EntropyState& st) {
  const int N = pb.N();
  const auto f = compute_fields(pb, st);
  GibbsDuhemAudit a;
  const auto& faces = pb.grid.faces();
  for (size_t k = 0; k < faces.size(); ++k) {
    const auto& fc = faces[k];
    const size_t L = u(fc.left), R = u(fc.right);
    double res = f.rhoeta[R] - f.rhoeta[L] - (f.rhoe[R] - f.rhoe[L]) / f.T[L];
    for (int i = 0; i < N; ++i) {
      res += st.z_at(fc.left, i) * (f.rho[R * u(N) + u(i)] - f.rho[L * u(N) + u(i)]);
    }
    res = std::abs(res) / fc.dist;
    if (res > a.max_residual) {
      a.max_residual = res;
      a.worst_face = static_cast<int>(k);
    }
  }
  return a;
}

DiagnosticsRecord make_record(const Problem& pb, long step, double time, const EntropyState& st,
                              const EntropyState* prev) {
  const int N = pb.N();
  DiagnosticsRecord r;
  r.step = step;
  r.time = time;
  const auto f = compute_fields(pb, st);
  r.lyapunov = lyapunov(pb, st);
  r.sat_min = min_of(st.S);
  r.rho_min = min_of(f.rho);
  r.T_min = min_of(f.T);
  r.T_max = max_of(f.T);
  double zmax = 0.0;
  for (double z : st.z) zmax = std::max(zmax, std::abs(z));
  r.balance_weight = 1.0 + zmax + 1.0 / r.T_min;
  r.mass_residual.assign(u(N), 0.0);
  if (prev) {
    const auto prod = entropy_production_field(pb, st, *prev);
    r.entropy_production = prod.integral(pb.grid.cell_volume());
    r.production_min = prod.min_term();
    r.energy_residual = energy_budget(pb, st, *prev);
    r.mass_residual = mass_budget(pb, st, *prev);
    r.entropy_balance = entropy_balance_residual(pb, st, *prev);
  }
  r.monitors = state_monitors(pb, st);
  return r;
}

std::vector<std::string> csv_header(int N) {
  std::vector<std::string> h{"step", "time", "entropy_production", "energy_residual"};
  for (int i = 1; i <= N; ++i) h.push_back("mass_residual_" + std::to_string(i));
  for (const char* s : {"lyapunov", "sat_min", "rho_min", "T_min", "T_max", "entropy_balance", "production_min"}) {
    h.emplace_back(s);
  }
  for (const char* s : {"Pc_L1", "p_L1", "rho_Lgamma", "S_rho_Lgamma", "energy_total", "T_L1", "logT_H1sq",
                        "Tbeta_H1sq", "PiZ_H1sq", "gradp_weighted_sq", "fS_W1q"}) {
    h.emplace_back(s);
  }
  return h;
}

std::vector<double> csv_row(const DiagnosticsRecord& r) {
  std::vector<double> v{static_cast<double>(r.step), r.time, r.entropy_production, r.energy_residual};
  v.insert(v.end(), r.mass_residual.begin(), r.mass_residual.end());
  for (double x : {r.lyapunov, r.sat_min, r.rho_min, r.T_min, r.T_max, r.entropy_balance, r.production_min}) {
    v.push_back(x);
  }
  for (const auto& [name, val] : r.monitors) v.push_back(val);
  return v;
}

bool is_isolated(const Problem& pb) {
  return pb.params.alpha == 0.0 && pb.b.cwiseAbs().maxCoeff() == 0.0;
}

std::vector<InvariantViolation> check_invariants(const Problem& pb, const DiagnosticsRecord& rec,
                                                 const DiagnosticsRecord* prev_rec, const InvariantTolerances& tol) {
  std::vector<InvariantViolation> v;
  auto fail = [&](const char* name, double value, double bound) { v.push_back({rec.step, name, value, bound}); };
  const double slack = 10.0 * tol.newton_tol * tol.scale;
  if (!(rec.rho_min > 0.0)) fail("density_positive", rec.rho_min, 0.0);
  if (!(rec.T_min > 0.0)) fail("temperature_positive", rec.T_min, 0.0);
  const double eps = pb.params.eps;
  if (tol.check_floor && eps > 0.0 && rec.sat_min < eps * (1.0 - 1e-12)) fail("saturation_floor", rec.sat_min, eps);
  if (!(rec.sat_min > 0.0)) fail("saturation_positive", rec.sat_min, 0.0);
  if (rec.step > 0) {
    const double pscale = std::max(1.0, std::abs(rec.entropy_production));
    if (rec.production_min < -1e-14 * pscale) fail("production_sign", rec.production_min, -1e-14 * pscale);
    if (std::abs(rec.energy_residual) > slack) fail("energy_budget", rec.energy_residual, slack);
    for (double mres : rec.mass_residual) {
      if (std::abs(mres) > slack) fail("mass_budget", mres, slack);
    }
    const double bslack = -slack * rec.balance_weight / pb.params.tau;
    if (rec.entropy_balance < bslack) fail("entropy_balance", rec.entropy_balance, bslack);
    if (tol.check_lyapunov && prev_rec && rec.lyapunov > prev_rec->lyapunov + slack) {
      fail("lyapunov_monotone", rec.lyapunov - prev_rec->lyapunov, slack);
    }
  }
  return v;
}

}  // namespace nrflow
