#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "nrflow/constitutive.hpp"
#include "nrflow/diagnostics.hpp"
#include "nrflow/scheme.hpp"
#include "support.hpp"

using namespace nrflow;
using namespace nrflow::testing;
using doctest::Approx;

namespace {

struct Stepped {
  Problem pb;
  EntropyState prev, cur;
};

Stepped one_step(const ModelParams& m, const Closures& c, int nx, double amp = 1.0) {
  Stepped s{Problem::make(m, c, Grid(nx, 1.0)), {}, {}};
  s.prev = initial_state(s.pb, bump_fields(s.pb, amp));
  SchemeConfig cfg;
  cfg.newton_tol = 1e-12;
  s.cur = time_step(s.pb, s.prev, cfg);
  return s;
}

bool has(const std::vector<InvariantViolation>& v, const std::string& name) {
  return std::any_of(v.begin(), v.end(), [&](const InvariantViolation& x) { return x.name == name; });
}

}  // namespace

TEST_CASE("production terms agree with a direct 1D evaluation") {
  ModelParams m;
  m.N = 3;
  Closures c;
  c.D = 0.7;
  c.kappa1 = 0.9;
  c.C1 = 1.3;
  const Problem pb = Problem::make(m, c, Grid(25, 1.0));
  std::mt19937_64 rng(9);
  const EntropyState prev = initial_state(pb, noisy_fields(pb, rng, 0.3));
  const EntropyState cur = initial_state(pb, noisy_fields(pb, rng, 0.3));
  const auto pf = entropy_production_field(pb, cur, prev);

  const int n = pb.num_cells(), N = 3;
  const double h = pb.grid.spacing(0), tau = m.tau, eps = m.eps;
  std::vector<double> T(static_cast<size_t>(n)), p(static_cast<size_t>(n)), lam(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    std::vector<double> z{cur.z_at(k, 0), cur.z_at(k, 1), cur.z_at(k, 2)};
    const auto rho = densities_from_entropy_vars(m, z, cur.w[static_cast<size_t>(k)], eps);
    T[static_cast<size_t>(k)] = std::exp(cur.w[static_cast<size_t>(k)]);
    p[static_cast<size_t>(k)] = pressure(m, rho, T[static_cast<size_t>(k)], eps);
    const double S = cur.S[static_cast<size_t>(k)];
    lam[static_cast<size_t>(k)] = S * S / c.viscosity;
  }
  std::vector<double> darcy(static_cast<size_t>(n), 0.0), diff(darcy), heat(darcy);
  for (int k = 0; k + 1 < n; ++k) {
    const size_t L = static_cast<size_t>(k), R = L + 1;
    const double gp = (p[R] - p[L]) / h;
    const double dar = m.K * 0.5 * (lam[L] + lam[R]) * 0.5 * (1 / T[L] + 1 / T[R]) * gp * gp;
    std::vector<double> gz;
    double mean = 0.0;
    for (int i = 0; i < N; ++i) {
      gz.push_back((cur.z_at(k + 1, i) - cur.z_at(k, i)) / h);
      mean += gz.back() / N;
    }
    double d2 = 0.0;
    for (double g : gz) d2 += (g - mean) * (g - mean);
    auto l00 = [&](double t) { return c.kappa1 * (1 + std::pow(t, m.beta)) * t * t; };
    const double gb = (1 / T[R] - 1 / T[L]) / h;
    const double ht = 0.5 * (l00(T[L]) + l00(T[R])) * gb * gb;
    for (size_t side : {L, R}) {
      darcy[side] += 0.5 * dar;
      diff[side] += 0.5 * c.D * d2;
      heat[side] += 0.5 * ht;
    }
  }
  for (int k = 0; k < n; ++k) {
    const size_t K = static_cast<size_t>(k);
    CHECK(pf.darcy[K] == Approx(darcy[K]).epsilon(1e-12).scale(1.0));
    CHECK(pf.diffusion[K] == Approx(diff[K]).epsilon(1e-12).scale(1.0));
    CHECK(pf.heat[K] == Approx(heat[K]).epsilon(1e-12).scale(1.0));
    const double S = cur.S[K], Sp = prev.S[K];
    const double sat = -c.porosity * (S - Sp) * (std::log(1 - S) - std::log(1 - Sp)) / (tau * tau * T[K]);
    CHECK(pf.saturation[K] == Approx(sat).epsilon(1e-12).scale(1.0));
    CHECK(pf.saturation[K] >= 0.0);
    double zm = 0.0;
    for (int i = 0; i < N; ++i) zm += cur.z_at(k, i) / N;
    double pz2 = 0.0, ez = 0.0;
    for (int i = 0; i < N; ++i) {
      pz2 += (cur.z_at(k, i) - zm) * (cur.z_at(k, i) - zm);
      ez += std::pow(std::abs(cur.z_at(k, i)), m.a);
    }
    CHECK(pf.reaction[K] == Approx(c.C1 * std::pow(pz2, m.a / 2) + eps * ez).epsilon(1e-12).scale(1.0));
  }
  CHECK(pf.min_term() >= 0.0);
  const auto tot = pf.total();
  double integral = 0.0;
  for (double t : tot) integral += t * h;
  CHECK(pf.integral(h) == Approx(integral).epsilon(1e-13));
}

TEST_CASE("single species has no mixing reaction") {
  ModelParams m;
  m.N = 1;
  m.eps = 0.0;
  const Problem pb = Problem::make(m, Closures{}, Grid(8, 1.0));
  std::mt19937_64 rng(4);
  const EntropyState st = initial_state(pb, noisy_fields(pb, rng, 0.4));
  const auto pf = entropy_production_field(pb, st, st);
  for (double r : pf.reaction) CHECK(r == 0.0);
  for (double d : pf.diffusion) CHECK(d == 0.0);
}

TEST_CASE("entropy balance residual equals the concavity gap minus the capillary production") {
  for (double alpha : {0.0, 1.0}) {
    ModelParams m;
    m.alpha = alpha;
    Closures c;
    c.b_scale = 0.5;
    c.c0 = 0.3;
    const Stepped s = one_step(m, c, 40);
    const Problem& pb = s.pb;
    const double vol = pb.grid.cell_volume(), tau = m.tau;
    double gap = 0.0;
    for (int k = 0; k < pb.num_cells(); ++k) {
      const size_t K = static_cast<size_t>(k);
      auto entropy_energy = [&](const EntropyState& st, std::vector<double>& rho) {
        std::vector<double> z;
        for (int i = 0; i < pb.N(); ++i) z.push_back(st.z_at(k, i));
        const auto r = densities_from_entropy_vars(m, z, st.w[K], m.eps);
        rho.assign(r.begin(), r.end());
        const double T = std::exp(st.w[K]);
        const auto [etas, Es] = skeleton_entropy_energy(m, T, m.eps);
        const double Ef = fluid_energy(m, internal_energy(m, rho, T, m.eps), st.S[K], m.eps);
        const double phi = c.porosity;
        return std::pair{phi * st.S[K] * water_entropy(m, rho, T) + (1 - phi) * etas, phi * Ef + (1 - phi) * Es};
      };
      std::vector<double> rk, rp;
      const auto [Hk, Ek] = entropy_energy(s.cur, rk);
      const auto [Hp, Ep] = entropy_energy(s.prev, rp);
      const double Tk = std::exp(s.cur.w[K]);
      double g = Hk - Hp - (Ek - Ep) / Tk;
      for (int i = 0; i < pb.N(); ++i) {
        g += s.cur.z_at(k, i) * c.porosity * (s.cur.S[K] * rk[static_cast<size_t>(i)] - s.prev.S[K] * rp[static_cast<size_t>(i)]);
      }
      const double S = s.cur.S[K], Sp = s.prev.S[K];
      g += c.porosity * (S - Sp) * (std::log(1 - S) - std::log(1 - Sp)) / (tau * Tk);
      gap += g * vol / tau;
    }
    const double res = entropy_balance_residual(pb, s.cur, s.prev);
    CHECK(res == Approx(gap).epsilon(1e-9));
    CHECK(res >= 0.0);
  }
}

TEST_CASE("energy and mass budgets close after a converged step") {
  ModelParams m;
  Closures c;
  c.b_scale = 0.4;
  const Stepped s = one_step(m, c, 50);
  CHECK(std::abs(energy_budget(s.pb, s.cur, s.prev)) < 1e-11);
  for (double r : mass_budget(s.pb, s.cur, s.prev)) CHECK(std::abs(r) < 1e-11);
  const auto mk = species_mass(s.pb, s.cur);
  CHECK(mk.size() == 2);
  CHECK(mk[0] > 0.0);
}

TEST_CASE("every diagnostic vanishes at equilibrium") {
  const Problem pb = Problem::make(ModelParams{}, Closures{}, Grid(16, 1.0));
  const EntropyState eq = equilibrium_state(pb);
  const auto pf = entropy_production_field(pb, eq, eq);
  for (double t : pf.total()) CHECK(t == 0.0);
  CHECK(std::abs(energy_budget(pb, eq, eq)) < 1e-14);
  for (double r : mass_budget(pb, eq, eq)) CHECK(std::abs(r) < 1e-14);
  CHECK(std::abs(entropy_balance_residual(pb, eq, eq)) < 1e-12);
  CHECK(boundary_entropy_flux(pb, eq) == 0.0);
  CHECK(regularizer_entropy_term(pb, eq) == 0.0);
  const auto rows = assemble_mass_residual(pb, eq, eq);
  for (double r : rows) CHECK(std::abs(r) < 1e-14);
  for (double r : assemble_energy_residual(pb, eq, eq)) CHECK(std::abs(r) < 1e-14);
}

TEST_CASE("totals on a uniform state") {
  const Problem pb = Problem::make(ModelParams{}, Closures{}, Grid(10, 2.0));
  const EntropyState eq = equilibrium_state(pb);
  const auto f = compute_fields(pb, eq);
  const double phi = pb.closures.porosity;
  CHECK(total_energy(pb, eq) == Approx(2.0 * (phi * f.Ef[0] + (1 - phi) * f.Es[0])));
  CHECK(total_entropy(pb, eq) == Approx(2.0 * (phi * eq.S[0] * f.rhoeta[0] + (1 - phi) * f.etas[0])));
  CHECK(lyapunov(pb, eq) == Approx(total_energy(pb, eq) - total_entropy(pb, eq)));
}

TEST_CASE("Lyapunov functional decreases in an isolated run") {
  const Problem pb = Problem::make(isolated_model(), Closures{}, Grid(40, 1.0));
  CHECK(is_isolated(pb));
  EntropyState st = initial_state(pb, bump_fields(pb));
  double prev = lyapunov(pb, st);
  for (int k = 0; k < 10; ++k) {
    st = time_step(pb, st, SchemeConfig{});
    const double now = lyapunov(pb, st);
    CHECK(now <= prev + 1e-9);
    prev = now;
  }
  CHECK_FALSE(is_isolated(Problem::make(ModelParams{}, Closures{}, Grid(4, 1.0))));
}

TEST_CASE("Gibbs-Duhem audit converges at first order") {
  auto audit = [](int nx) {
    const Problem pb = Problem::make(ModelParams{}, Closures{}, Grid(nx, 1.0));
    return gibbs_duhem_audit(pb, initial_state(pb, bump_fields(pb))).max_residual;
  };
  const double a = audit(50), b = audit(100), c = audit(200);
  CHECK(a / b >= 1.7);
  CHECK(a / b <= 2.3);
  CHECK(b / c >= 1.7);
  CHECK(b / c <= 2.3);
  const Problem pb = Problem::make(ModelParams{}, Closures{}, Grid(8, 1.0));
  CHECK(gibbs_duhem_audit(pb, equilibrium_state(pb)).max_residual == 0.0);
}

TEST_CASE("monitors and their aggregation") {
  const Problem pb = Problem::make(ModelParams{}, Closures{}, Grid(20, 1.0));
  const EntropyState st = initial_state(pb, bump_fields(pb));
  const auto mon = state_monitors(pb, st);
  REQUIRE(mon.size() == 11);
  for (const auto& [name, v] : mon) {
    CHECK_MESSAGE(std::isfinite(v), name);
    if (name != "energy_total") CHECK_MESSAGE(v >= 0.0, name);
  }
  const std::vector<std::vector<std::pair<std::string, double>>> traj{
      {{"T_L1", 1.0}, {"logT_H1sq", 5.0}}, {{"T_L1", 3.0}, {"logT_H1sq", 2.0}}, {{"T_L1", 2.0}, {"logT_H1sq", 4.0}}};
  const auto agg = apriori_monitors(traj, 0.5);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].first == "T_L1_sup");
  CHECK(agg[0].second == 3.0);
  CHECK(agg[1].first == "logT_H1sq_time_integral");
  CHECK(agg[1].second == Approx(3.0));
  CHECK(apriori_monitors({}, 0.1).empty());
}

TEST_CASE("records and CSV rows") {
  ModelParams m;
  const Stepped s = one_step(m, Closures{}, 30);
  const auto r0 = make_record(s.pb, 0, 0.0, s.prev, nullptr);
  const auto r1 = make_record(s.pb, 1, m.tau, s.cur, &s.prev);
  CHECK(r0.entropy_production == 0.0);
  CHECK(r1.entropy_production > 0.0);
  CHECK(r1.sat_min >= m.eps);
  CHECK(r1.T_min <= r1.T_max);
  CHECK(csv_header(2).size() == csv_row(r1).size());
  CHECK(csv_header(3).size() == csv_header(2).size() + 1);
  CHECK(csv_header(2)[4] == "mass_residual_1");
  CHECK(csv_row(r1)[0] == 1.0);

  InvariantTolerances tol;
  tol.check_lyapunov = true;
  CHECK(check_invariants(s.pb, r1, &r0, tol).empty());
}

TEST_CASE("invariant checks flag each violation by name") {
  const Problem pb = Problem::make(ModelParams{}, Closures{}, Grid(4, 1.0));
  DiagnosticsRecord ok;
  ok.step = 3;
  ok.mass_residual = {0.0, 0.0};
  ok.sat_min = 0.5;
  ok.rho_min = 0.1;
  ok.T_min = 1.0;
  ok.balance_weight = 1.0;
  InvariantTolerances tol;
  CHECK(check_invariants(pb, ok, nullptr, tol).empty());

  auto bad = ok;
  bad.rho_min = 0.0;
  bad.T_min = -1.0;
  bad.sat_min = 0.005;
  bad.production_min = -1e-6;
  bad.energy_residual = 1e-6;
  bad.mass_residual = {0.0, -1e-6};
  bad.entropy_balance = -1.0;
  bad.lyapunov = 1.0;
  tol.check_lyapunov = true;
  const auto v = check_invariants(pb, bad, &ok, tol);
  for (const char* name : {"density_positive", "temperature_positive", "saturation_floor", "production_sign",
                           "energy_budget", "mass_budget", "entropy_balance", "lyapunov_monotone"}) {
    CHECK_MESSAGE(has(v, name), name);
  }
  for (const auto& x : v) CHECK(x.step == 3);
  tol.check_floor = false;
  CHECK_FALSE(has(check_invariants(pb, bad, &ok, tol), "saturation_floor"));
  bad.step = 0;
  CHECK_FALSE(has(check_invariants(pb, bad, &ok, tol), "energy_budget"));
}
