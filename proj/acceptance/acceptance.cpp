// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nrflow/commands.hpp"
#include "nrflow/constitutive.hpp"
#include "nrflow/hypotheses.hpp"

using namespace nrflow;

namespace {

// Pinned tolerances.
constexpr double kFdRel = 1e-6;
constexpr double kEulerRel = 1e-12;
constexpr double kOnsagerRel = 1e-12;
constexpr double kProductionFloor = -1e-10;
constexpr double kEnergyDrift = 1e-7;
constexpr double kMassDrift = 1e-9;
constexpr double kStationary = 1e-10;
constexpr double kOrderTarget = 1.0;
constexpr double kOrderBand = 0.2;
constexpr double kRoundTrip = 1e-10;

struct Result {
  bool pass = false;
  std::string detail;
};

double min_sat_seen = INFINITY;
long floor_violations = 0;
long floor_checked_steps = 0;

void track_floor(const RunOutcome& o, double eps) {
  for (const auto& r : o.records) {
    ++floor_checked_steps;
    min_sat_seen = std::min(min_sat_seen, r.sat_min);
    if (r.sat_min < eps) ++floor_violations;
  }
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunConfig base_config(int nx, double horizon) {
  RunConfig cfg = parse_config("");
  cfg.grid.nx = nx;
  cfg.horizon = horizon;
  return cfg;
}

Result thermodynamic_derivatives() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> lr(-3.0, 0.5), uT(0.2, 3.0), ue(0.0, 0.2);
  double worst_fd = 0.0, worst_euler = 0.0;
  for (int k = 0; k < 1000; ++k) {
    ModelParams m;
    m.N = 1 + k % 3;
    std::vector<double> rho;
    for (int i = 0; i < m.N; ++i) rho.push_back(std::exp(lr(rng)));
    const double T = uT(rng), eps = ue(rng);
    const auto mu = chemical_potentials(m, rho, T, eps);
    for (int i = 0; i < m.N; ++i) {
      const size_t iu = static_cast<size_t>(i);
      const double h = 1e-6 * rho[iu];
      auto rp = rho, rm = rho;
      rp[iu] += h;
      rm[iu] -= h;
      const double fd = (free_energy_water(m, rp, T, eps) - free_energy_water(m, rm, T, eps)) / (2 * h);
      worst_fd = std::max(worst_fd, std::abs(mu[iu] - fd) / std::max(1.0, std::abs(fd)));
    }
    const double h = 1e-6 * T;
    const double dpsi = (free_energy_water(m, rho, T + h, eps) - free_energy_water(m, rho, T - h, eps)) / (2 * h);
    const double rhoe = free_energy_water(m, rho, T, eps) - T * dpsi;
    const double e = internal_energy(m, rho, T, eps);
    worst_fd = std::max(worst_fd, std::abs(e - rhoe) / std::max(1.0, std::abs(rhoe)));
    const auto tp = ThermoPoint::make(m, rho, T, eps);
    worst_euler = std::max(worst_euler, std::abs(tp.euler_residual()));
  }
  return {worst_fd <= kFdRel && worst_euler <= kEulerRel,
          "max FD rel error " + fmt("%.2e", worst_fd) + ", Euler identity " + fmt("%.2e", worst_euler)};
}

Result production_sign() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> n(0.0, 1.0);
  double min_quad = INFINITY, worst_cancel = 0.0;
  for (int k = 0; k < 1000; ++k) {
    ModelParams m;
    m.N = 1 + k % 3;
    Closures c;
    c.c0 = 0.8;
    const int dim = 1 + k % 2;
    std::vector<double> rho;
    for (int i = 0; i < m.N; ++i) rho.push_back(std::exp(n(rng)));
    const double T = std::exp(0.4 * n(rng));
    Eigen::MatrixXd gz(m.N, dim);
    Eigen::VectorXd gb(dim);
    for (int i = 0; i < m.N; ++i) {
      for (int d = 0; d < dim; ++d) gz(i, d) = n(rng);
    }
    for (int d = 0; d < dim; ++d) gb(d) = n(rng);
    const double quad = quadratic_entropy_production(m, c, rho, T, gz, gb);
    const double from_flux = flux_entropy_production(onsager_fluxes(m, c, rho, T, gz, gb), gz, gb);
    min_quad = std::min(min_quad, quad);
    worst_cancel = std::max(worst_cancel, std::abs(from_flux - quad) / std::max(1.0, std::abs(quad)));
  }

  RunConfig cfg = base_config(200, 1.0);
  cfg.initial.noise = 0.05;
  cfg.seed = 5;
  const RunOutcome o = simulate(cfg, "");
  track_floor(o, cfg.model.eps);
  double min_term = INFINITY;
  for (size_t k = 1; k < o.records.size(); ++k) min_term = std::min(min_term, o.records[k].production_min);
  const bool ok = min_quad >= 0.0 && worst_cancel <= kOnsagerRel && o.exit_code == kExitOk && o.steps == 100 &&
                  min_term >= kProductionFloor;
  return {ok, "min quadratic form " + fmt("%.2e", min_quad) + ", cross-term mismatch " + fmt("%.2e", worst_cancel) +
                  ", run steps " + std::to_string(o.steps) + ", min per-cell term " + fmt("%.2e", min_term)};
}

RunConfig isolated_config() {
  RunConfig cfg = base_config(100, 1.0);
  cfg.model.alpha = 0.0;
  cfg.model.T0 = 1.0;
  cfg.closures.b_scale = 0.0;
  return cfg;
}

// 10 newton_tol, scaled by the initial total energy.
double step_slack(const RunConfig& cfg) {
  const Problem pb = make_problem(cfg);
  const auto tol = run_tolerances(cfg, pb, initial_state(pb, make_initial_fields(cfg, pb)));
  return 10.0 * tol.newton_tol * tol.scale;
}

const RunOutcome& isolated_run() {
  static const RunOutcome o = [] {
    const RunConfig cfg = isolated_config();
    RunOutcome r = simulate(cfg, "");
    track_floor(r, cfg.model.eps);
    return r;
  }();
  return o;
}

Result energy_balance() {
  const RunConfig cfg = isolated_config();
  const RunOutcome& o = isolated_run();
  const double slack = step_slack(cfg);
  double worst = 0.0, cumulative = 0.0;
  for (size_t k = 1; k < o.records.size(); ++k) {
    worst = std::max(worst, std::abs(o.records[k].energy_residual));
    cumulative += o.records[k].energy_residual;
  }
  const bool ok = o.exit_code == kExitOk && o.steps == 100 && worst <= slack && std::abs(cumulative) <= kEnergyDrift;
  return {ok, "max step residual " + fmt("%.2e", worst) + " (bound " + fmt("%.1e", slack) + "), cumulative drift " +
                  fmt("%.2e", std::abs(cumulative))};
}

Result mass_conservation() {
  RunConfig cfg = base_config(100, 1.0);
  cfg.model.eps = 0.0;
  cfg.closures.C1 = 0.0;
  cfg.closures.b_scale = 0.0;
  cfg.scheme.newton_tol = 1e-12;
  const RunOutcome o = simulate(cfg, "");
  const Problem pb = make_problem(cfg);
  const EntropyState init = initial_state(pb, make_initial_fields(cfg, pb));
  const auto m0 = species_mass(pb, init);
  const auto m1 = species_mass(pb, o.final_state);
  double drift = 0.0;
  for (size_t i = 0; i < m0.size(); ++i) drift = std::max(drift, std::abs(m1[i] - m0[i]));
  return {o.exit_code == kExitOk && o.steps == 100 && drift <= kMassDrift,
          "steps " + std::to_string(o.steps) + ", max species mass drift " + fmt("%.2e", drift)};
}

Result saturation_floor() {
  // Low initial saturation with a dry, warm dip in the middle.
  RunConfig cfg = base_config(100, 1.0);
  cfg.initial.S = 0.03;
  cfg.initial.S_amplitude = -0.02;
  cfg.initial.T_amplitude = 0.5;
  const RunOutcome o = simulate(cfg, "");
  track_floor(o, cfg.model.eps);
  const double bound = saturation_floor_eps_bound(cfg.model, cfg.closures);
  const bool ok = o.exit_code == kExitOk && floor_violations == 0 && cfg.model.eps < bound;
  return {ok, "eps 0.01 < bound " + fmt("%.4f", bound) + ", min S " + fmt("%.6f", min_sat_seen) + " over " +
                  std::to_string(floor_checked_steps) + " snapshots, violations " + std::to_string(floor_violations)};
}

Result lyapunov_monotone() {
  const RunConfig cfg = isolated_config();
  const RunOutcome& o = isolated_run();
  const double slack = step_slack(cfg);
  long violations = 0;
  double worst = -INFINITY;
  for (size_t k = 1; k < o.records.size(); ++k) {
    const double inc = o.records[k].lyapunov - o.records[k - 1].lyapunov;
    worst = std::max(worst, inc);
    if (inc > slack) ++violations;
  }
  return {o.exit_code == kExitOk && o.steps == 100 && violations == 0,
          "largest step change " + fmt("%.2e", worst) + ", violations " + std::to_string(violations)};
}

Result equilibrium() {
  RunConfig cfg = base_config(100, 1.0);
  const Problem pb = make_problem(cfg);
  EntropyState eq;
  eq.N = pb.N();
  const size_t nc = static_cast<size_t>(pb.num_cells());
  eq.z.assign(nc * static_cast<size_t>(eq.N), 0.0);
  eq.w.assign(nc, 0.0);
  const std::vector<double> z(static_cast<size_t>(eq.N), 0.0);
  const auto rho = densities_from_entropy_vars(cfg.model, z, 0.0, cfg.model.eps);
  double rt = 0.0;
  for (double r : rho) rt += r;
  const double p = pressure_total(cfg.model, rt, 1.0, cfg.model.eps);
  eq.S.assign(nc, std::pow(-p / cfg.model.c_p, -1.0 / cfg.model.k_p));
  long steps = 0;
  const EntropyState end = run_simulation(pb, eq, cfg.scheme, cfg.horizon,
                                          [&](const StepEvent& ev) { steps = ev.step; });
  double d = 0.0;
  for (size_t k = 0; k < eq.z.size(); ++k) d = std::max(d, std::abs(end.z[k] - eq.z[k]));
  for (size_t k = 0; k < nc; ++k) {
    d = std::max(d, std::abs(end.w[k] - eq.w[k]));
    d = std::max(d, std::abs(end.S[k] - eq.S[k]));
  }
  return {steps == 100 && d <= kStationary, "S_eq " + fmt("%.6f", eq.S[0]) + ", max field change " + fmt("%.2e", d)};
}

Result temporal_convergence() {
  RunConfig cfg = base_config(50, 0.25);
  cfg.sweep.tau = {1.0 / 40, 1.0 / 80, 1.0 / 160, 1.0 / 320};
  cfg.sweep.eps = {cfg.model.eps};
  cfg.sweep.delta = {0.0};
  cfg.sweep.reference_tau = 1.0 / 1280;
  cfg.sweep.workers = 1;
  const auto pts = run_sweep(cfg, "");
  bool ok = pts.size() == 4;
  std::string errs;
  for (const auto& p : pts) {
    ok = ok && p.exit_code == kExitOk && p.error_l2 > 0.0;
    errs += fmt(" %.3e", p.error_l2);
  }
  const double order = ok ? fitted_order(pts, 0) : NAN;
  std::string pair;
  for (size_t k = 1; k < pts.size(); ++k) pair += fmt(" %.3f", pts[k].order_pairwise);
  ok = ok && std::abs(order - kOrderTarget) <= kOrderBand;
  return {ok, "errors" + errs + ", pairwise" + pair + ", fitted order " + fmt("%.3f", order)};
}

Result round_trip() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> lr(-4.0, 1.0), uT(0.1, 5.0), ue(0.0, 0.2);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    ModelParams m;
    m.N = 1 + k % 3;
    std::vector<double> rho;
    for (int i = 0; i < m.N; ++i) rho.push_back(std::exp(lr(rng)));
    const double T = uT(rng), eps = ue(rng);
    const auto mu = chemical_potentials(m, rho, T, eps);
    std::vector<double> z;
    for (double x : mu) z.push_back(x / T);
    const auto back = densities_from_entropy_vars(m, z, std::log(T), eps);
    for (int i = 0; i < m.N; ++i) {
      const size_t iu = static_cast<size_t>(i);
      worst = std::max(worst, std::abs(back[iu] - rho[iu]) / rho[iu]);
    }
  }
  return {worst <= kRoundTrip, "max relative error " + fmt("%.2e", worst)};
}

Result validator() {
  const bool defaults = validate_hypotheses(ModelParams{}, Closures{}).all_pass();
  struct Mutation {
    const char* label;
    const char* expect;
    std::function<void(ModelParams&, Closures&)> apply;
  };
  const std::vector<Mutation> mutations{
      {"gamma=1.5", "gamma", [](ModelParams& m, Closures&) { m.gamma = 1.5; }},
      {"alpha_r=5", "relperm_exponent", [](ModelParams& m, Closures&) { m.alpha_r = 5.0; }},
      {"b=I", "boundary_matrix", [](ModelParams& m, Closures& c) { c.b_matrix = Eigen::MatrixXd::Identity(m.N, m.N); }},
      {"Phi=1", "porosity_bounds", [](ModelParams&, Closures& c) { c.porosity = 1.0; }},
      {"k_p=1", "capillary_kr_ratio", [](ModelParams& m, Closures&) { m.k_p = 1.0; }},
  };
  bool ok = defaults;
  std::string detail = defaults ? "defaults pass" : "defaults FAIL";
  for (const auto& mu : mutations) {
    ModelParams m;
    Closures c;
    mu.apply(m, c);
    const auto f = validate_hypotheses(m, c).failures();
    const bool hit = std::find(f.begin(), f.end(), mu.expect) != f.end();
    ok = ok && hit;
    detail += std::string("; ") + mu.label + (hit ? " -> " : " -> missing ") + mu.expect;
  }
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Result()> run;
    double budget_s;
  };
  // Criterion 5 runs after every other run so that it sees all of them.
  const std::vector<Criterion> all{
      {1, "thermodynamic derivatives", thermodynamic_derivatives, 5},
      {2, "entropy production sign", production_sign, 30},
      {3, "discrete energy balance", energy_balance, 0},
      {4, "mass conservation", mass_conservation, 0},
      {6, "Lyapunov monotonicity", lyapunov_monotone, 0},
      {7, "equilibrium stationarity", equilibrium, 0},
      {8, "temporal convergence", temporal_convergence, 300},
      {9, "round-trip inversion", round_trip, 0},
      {10, "hypothesis validator", validator, 0},
      {5, "saturation floor", saturation_floor, 0},
  };
  std::vector<std::pair<int, std::string>> lines;
  bool all_pass = true;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && dt > c.budget_s) {
      r.pass = false;
      r.detail += " (runtime over budget)";
    }
    all_pass = all_pass && r.pass;
    char buf[64];
    std::snprintf(buf, sizeof buf, " [%.2f s]", dt);
    lines.emplace_back(c.id, std::string(r.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(c.id) + " (" +
                                 c.name + "): " + r.detail + buf);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  return all_pass ? 0 : 1;
}
