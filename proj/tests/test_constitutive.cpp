#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nrflow/constitutive.hpp"
#include "nrflow/hypotheses.hpp"

using namespace nrflow;
using doctest::Approx;

namespace {

std::vector<double> random_rho(std::mt19937_64& rng, int N) {
  std::uniform_real_distribution<double> u(-3.0, 0.5);
  std::vector<double> r;
  for (int i = 0; i < N; ++i) r.push_back(std::exp(u(rng)));
  return r;
}

}  // namespace

TEST_CASE("free energy matches a high-precision value") {
  ModelParams m;
  m.p_at = 1.0;
  const std::vector<double> rho{0.5, 0.5};
  // 2 log(1/2) + 1 - 2 log 2 + 1 + 0.1, evaluated at 40 digits
  CHECK(free_energy_water(m, rho, 2.0, 0.1) == Approx(-0.672588722239781237668928485832706272302).epsilon(1e-15));
}

TEST_CASE("chemical potentials and internal energy are derivatives of the free energy") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uT(0.2, 3.0), ue(0.0, 0.2);
  ModelParams m;
  for (int trial = 0; trial < 200; ++trial) {
    const int N = 1 + trial % 3;
    m.N = N;
    auto rho = random_rho(rng, N);
    const double T = uT(rng), eps = ue(rng);
    const auto mu = chemical_potentials(m, rho, T, eps);
    for (int i = 0; i < N; ++i) {
      const double h = 1e-6 * rho[static_cast<size_t>(i)];
      auto rp = rho, rm = rho;
      rp[static_cast<size_t>(i)] += h;
      rm[static_cast<size_t>(i)] -= h;
      const double fd = (free_energy_water(m, rp, T, eps) - free_energy_water(m, rm, T, eps)) / (2 * h);
      CHECK(mu[static_cast<size_t>(i)] == Approx(fd).epsilon(1e-6).scale(1.0));
    }
    // rho e = psi - T d(psi)/dT
    const double h = 1e-6 * T;
    const double dpsi = (free_energy_water(m, rho, T + h, eps) - free_energy_water(m, rho, T - h, eps)) / (2 * h);
    const double rhoe = free_energy_water(m, rho, T, eps) - T * dpsi;
    CHECK(internal_energy(m, rho, T, eps) == Approx(rhoe).epsilon(1e-6).scale(1.0));
    CHECK(water_entropy(m, rho, T) == Approx(-dpsi).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("pressure satisfies p = sum rho_i mu_i - rho psi") {
  std::mt19937_64 rng(11);
  ModelParams m;
  m.N = 3;
  for (int trial = 0; trial < 100; ++trial) {
    auto rho = random_rho(rng, 3);
    const double T = 0.5 + trial * 0.02, eps = 0.01 * (trial % 5);
    const auto mu = chemical_potentials(m, rho, T, eps);
    double s = -free_energy_water(m, rho, T, eps);
    for (int i = 0; i < 3; ++i) s += rho[static_cast<size_t>(i)] * mu[static_cast<size_t>(i)];
    CHECK(pressure(m, rho, T, eps) == Approx(s).epsilon(1e-12).scale(1.0));
    const auto tp = ThermoPoint::make(m, rho, T, eps);
    CHECK(std::abs(tp.euler_residual()) < 1e-12);
  }
}

TEST_CASE("capillary closures") {
  ModelParams m;
  Closures c;
  CHECK(rel_perm(m, 0.5) == Approx(0.25));
  CHECK(rel_perm(m, 1.5) == Approx(1.0));
  CHECK(rel_perm(m, -0.1) == 0.0);
  CHECK(capillary_pressure(m, 0.5) == Approx(4.0));
  CHECK(capillary_pressure_reg(m, 0.5, 0.1) == Approx(4.0));
  ModelParams flat = m;
  flat.k_p = 0.0;
  CHECK(capillary_pressure_reg(flat, 0.5, 0.1) == Approx(1.0 - 0.1 * std::log(0.5)));
  CHECK_THROWS_AS(capillary_pressure_reg(m, 0.0, 0.1), std::domain_error);
  CHECK(dyn_capillary(c, 0.0) == Approx(4.0));
  CHECK(dyn_capillary_inverse(c, dyn_capillary(c, 0.37)) == Approx(0.37).epsilon(1e-14));
  for (double s : {0.05, 0.3, 0.7, 0.95}) {
    const double h = 1e-6;
    CHECK(capillary_pressure_derivative(m, s) ==
          Approx((capillary_pressure(m, s + h) - capillary_pressure(m, s - h)) / (2 * h)).epsilon(1e-6));
    CHECK(capillary_pressure_reg_derivative(m, s, 0.02) ==
          Approx((capillary_pressure_reg(m, s + h, 0.02) - capillary_pressure_reg(m, s - h, 0.02)) / (2 * h))
              .epsilon(1e-6));
    CHECK(dyn_capillary_derivative(c, s) ==
          Approx((dyn_capillary(c, s + h) - dyn_capillary(c, s - h)) / (2 * h)).epsilon(1e-6));
    // G' = P_c,eps
    CHECK(((capillary_antiderivative(m, s + h, 0.02) - capillary_antiderivative(m, s - h, 0.02)) / (2 * h)) ==
          Approx(capillary_pressure_reg(m, s, 0.02)).epsilon(1e-6));
  }
  CHECK(heat_conductivity(m, c, 2.0) == Approx(17.0));
  CHECK(mobility(m, c, 0.5, 1.0) == Approx(0.25));
}

TEST_CASE("fluid energy: closed form agrees with adaptive quadrature") {
  ModelParams m;
  const std::vector<double> rho{0.4, 0.1};
  for (double S : {0.05, 0.3, 0.5, 0.9}) {
    const auto [Eint, Ef] = interfacial_and_fluid_energy(m, rho, 1.3, S, 0.01);
    const double rhoe = internal_energy(m, rho, 1.3, 0.01);
    CHECK(Ef == Approx(fluid_energy(m, rhoe, S, 0.01)).epsilon(1e-11));
    CHECK(Eint >= 0.0);
  }
}

TEST_CASE("skeleton entropy and energy") {
  ModelParams m;
  const auto [eta, E] = skeleton_entropy_energy(m, 2.0, 0.1);
  CHECK(eta == Approx(m.c_s - 1 + m.c_s * std::log(2.0) + 0.1 * m.K2 * std::pow(2.0, m.K2 - 1)));
  CHECK(E == Approx(m.c_s * 2.0 + 0.1 * (m.K2 - 1) * std::pow(2.0, m.K2)));
  // dE/dT = T d(eta)/dT
  const double h = 1e-6;
  const double dE = (skeleton_entropy_energy(m, 2.0 + h, 0.1).second - skeleton_entropy_energy(m, 2.0 - h, 0.1).second) / (2 * h);
  const double deta = (skeleton_entropy_energy(m, 2.0 + h, 0.1).first - skeleton_entropy_energy(m, 2.0 - h, 0.1).first) / (2 * h);
  CHECK(dE == Approx(2.0 * deta).epsilon(1e-6));
}

TEST_CASE("projector") {
  const std::vector<double> u{1.0, 2.0, 6.0};
  const auto p = projector(u);
  CHECK(p[0] + p[1] + p[2] == Approx(0.0).scale(1.0));
  const auto pp = projector(p);
  for (int i = 0; i < 3; ++i) CHECK(pp[static_cast<size_t>(i)] == Approx(p[static_cast<size_t>(i)]));
  const std::vector<double> one{3.0};
  CHECK(projector(one)[0] == 0.0);
}

TEST_CASE("reaction terms are dissipative and balanced") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  ModelParams m;
  m.N = 3;
  Closures c;
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> z{n(rng), n(rng), n(rng)};
    const auto rt = reaction_tilde(m, c, z);
    CHECK(rt[0] + rt[1] + rt[2] == Approx(0.0).scale(1.0));
    const auto pz = projector(z);
    const double npz = std::sqrt(pz[0] * pz[0] + pz[1] * pz[1] + pz[2] * pz[2]);
    double prod = 0.0;
    for (int i = 0; i < 3; ++i) prod -= rt[static_cast<size_t>(i)] * z[static_cast<size_t>(i)];
    CHECK(prod == Approx(c.C1 * std::pow(npz, m.a)).epsilon(1e-12).scale(1.0));
    const auto r = reaction_terms(m, c, 1.0, 1.0, z, 0.05);
    double pe = 0.0;
    for (int i = 0; i < 3; ++i) pe -= r[static_cast<size_t>(i)] * z[static_cast<size_t>(i)];
    CHECK(pe >= prod - 1e-12);
  }
}

TEST_CASE("Onsager fluxes: quadratic form, cross terms cancel") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  ModelParams m;
  m.N = 2;
  Closures c;
  c.c0 = 0.7;
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> rho{std::exp(n(rng)), std::exp(n(rng))};
    const double T = std::exp(0.3 * n(rng));
    Eigen::MatrixXd gz(2, 2);
    Eigen::VectorXd gb(2);
    gz << n(rng), n(rng), n(rng), n(rng);
    gb << n(rng), n(rng);
    const auto f = onsager_fluxes(m, c, rho, T, gz, gb);
    const double from_flux = flux_entropy_production(f, gz, gb);
    const double quad = quadratic_entropy_production(m, c, rho, T, gz, gb);
    CHECK(quad >= 0.0);
    CHECK(from_flux == Approx(quad).epsilon(1e-12).scale(1.0));
  }
  const Eigen::MatrixXd L = onsager_matrix(c, 3);
  CHECK((L - L.transpose()).norm() == 0.0);
  CHECK(L.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > -1e-14);
  CHECK((L * Eigen::VectorXd::Ones(3)).norm() < 1e-14);
}

TEST_CASE("density inversion round-trips the chemical potentials") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uT(0.3, 4.0), ue(0.0, 0.1);
  ModelParams m;
  for (int trial = 0; trial < 300; ++trial) {
    const int N = 1 + trial % 3;
    m.N = N;
    const auto rho = random_rho(rng, N);
    const double T = uT(rng), eps = ue(rng);
    const auto mu = chemical_potentials(m, rho, T, eps);
    std::vector<double> z;
    for (double x : mu) z.push_back(x / T);
    const auto back = densities_from_entropy_vars(m, z, std::log(T), eps);
    for (int i = 0; i < N; ++i) {
      CHECK(back[static_cast<size_t>(i)] == Approx(rho[static_cast<size_t>(i)]).epsilon(1e-11));
    }
  }
}

TEST_CASE("density inversion at cold and dense states") {
  ModelParams m;
  m.N = 1;
  for (double T : {0.05, 0.1, 0.5}) {
    for (double r : {1.0, 2.7, 6.0, 1e-4}) {
      for (double eps : {0.0, 0.2}) {
        const std::vector<double> rho{r};
        const double z = chemical_potentials(m, rho, T, eps)[0] / T;
        const auto back = densities_from_entropy_vars(m, std::vector<double>{z}, std::log(T), eps);
        CHECK(back[0] == Approx(r).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("density inversion derivative through dual numbers") {
  ModelParams m;
  const double eps = 0.02;
  const std::vector<double> z{-1.2, 0.4};
  const double w = 0.3, h = 1e-6;
  std::vector<Dual> zd{Dual{z[0], 1.0}, Dual{z[1], 0.0}};
  const auto rd = densities_from_entropy_vars(m, zd, Dual{w, 0.0}, eps);
  auto zp = z, zm = z;
  zp[0] += h;
  zm[0] -= h;
  const auto rp = densities_from_entropy_vars(m, zp, w, eps);
  const auto rm = densities_from_entropy_vars(m, zm, w, eps);
  for (int i = 0; i < 2; ++i) {
    CHECK(rd[static_cast<size_t>(i)].d == Approx((rp[static_cast<size_t>(i)] - rm[static_cast<size_t>(i)]) / (2 * h)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(densities_from_entropy_vars(m, std::vector<double>{NAN, 0.0}, 0.0, eps), std::domain_error);
}

TEST_CASE("saturation update matches high-precision roots") {
  ModelParams m;
  Closures c;
  CHECK(saturation_root(m, c, 0.5, 0.0, 0.1, 0.0) == Approx(0.6158755997823565302193817170750993889732).epsilon(1e-14));
  // the eps term is only active for a capillary pressure bounded at 0
  CHECK(saturation_root(m, c, 0.5, 0.0, 0.1, 0.01) == Approx(0.6158755997823565302193817170750993889732).epsilon(1e-14));
  ModelParams flat = m;
  flat.k_p = 0.0;
  CHECK(saturation_root(flat, c, 0.5, 0.0, 0.1, 0.01) == Approx(0.5478534508939609860830951078649008326683).epsilon(1e-14));
  // larger p pushes the root up, h is decreasing in s
  double last = 0.0;
  for (double p : {-1.0, 0.0, 1.0, 5.0}) {
    const double s = saturation_root(m, c, 0.5, p, 0.1, 0.01);
    CHECK(s > last);
    last = s;
  }
  const Dual sd = saturation_update(m, c, 0.5, Dual{0.3, 1.0}, 0.1, 0.01);
  const double h = 1e-6;
  const double fd = (saturation_root(m, c, 0.5, 0.3 + h, 0.1, 0.01) - saturation_root(m, c, 0.5, 0.3 - h, 0.1, 0.01)) / (2 * h);
  CHECK(sd.d == Approx(fd).epsilon(1e-6));
}

TEST_CASE("saturation stays above eps for p >= -p_at") {
  ModelParams m;
  Closures c;
  for (double Sp : {0.01, 0.02, 0.3, 0.99}) {
    for (double p : {-m.p_at, 0.0, 10.0}) {
      for (double tau : {1e-3, 0.1, 10.0}) {
        const double s = saturation_root(m, c, Sp, p, tau, 0.01);
        CHECK(s >= 0.01);
        CHECK(s < 1.0);
      }
    }
  }
}

TEST_CASE("capillary floor constant") {
  ModelParams m;
  Closures c;
  CHECK(capillary_floor_constant(m, c) == Approx(1.2096093229445013723).epsilon(1e-8));
  CHECK(saturation_floor_eps_bound(m, c) == Approx(0.5));
}

TEST_CASE("invalid inputs are rejected") {
  ModelParams m;
  CHECK_THROWS_AS(free_energy_water(m, std::vector<double>{-1.0, 0.2}, 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(chemical_potentials(m, std::vector<double>{0.1, 0.2}, -1.0, 0.0), std::domain_error);
}
