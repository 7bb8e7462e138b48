#include "nrflow/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nrflow/constitutive.hpp"

namespace nrflow {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::string at(const char* var, double x) { return std::string(var) + "=" + fmt(x); }

// Samples of (0, hi): geometric towards 0 plus a uniform grid.
std::vector<double> samples_below(double hi) {
  std::vector<double> s;
  for (int k = 1; k <= 40; ++k) s.push_back(hi * std::pow(2.0, -k));
  for (int k = 1; k < 2000; ++k) s.push_back(hi * k / 2000.0);
  return s;
}

std::vector<double> random_vector(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = g(rng);
  return v;
}

double norm_pi(const std::vector<double>& v) {
  const auto p = projector(v);
  double s = 0.0;
  for (double x : p) s += x * x;
  return std::sqrt(s);
}

}  // namespace

bool HypothesisReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

std::vector<std::string> HypothesisReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.pass) out.push_back(c.name);
  }
  return out;
}

const HypothesisCheck* HypothesisReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

double capillary_floor_constant(const ModelParams& m, const Closures& c) {
  double best = std::numeric_limits<double>::infinity();
  for (double s : samples_below(c.s0)) best = std::min(best, capillary_pressure(m, s) / dyn_capillary(c, s));
  best = std::min(best, capillary_pressure(m, c.s0) / dyn_capillary(c, c.s0));
  return best;
}

double saturation_floor_eps_bound(const ModelParams& m, const Closures& c) {
  const double lam0 = capillary_floor_constant(m, c);
  if (!(lam0 > 0.0)) return 0.0;
  return std::min(c.s0, dyn_capillary_inverse(c, m.p_at / lam0));
}

HypothesisReport validate_hypotheses(const ModelParams& m, const Closures& c, std::uint64_t seed) {
  HypothesisReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto add = [&](std::string name, bool pass, double worst, std::string witness, std::string msg) {
    rep.checks.push_back({std::move(name), pass, worst, std::move(witness), std::move(msg)});
  };
  const int N = m.N;

  add("species_count", N >= 1 && N <= kMaxSpecies, N, at("N", N), "1 <= N <= 8");

  add("gamma", m.gamma > 2.0, m.gamma - 2.0, at("gamma", m.gamma), "gamma > 2");

  add("viscosity_bounds", c.viscosity > 0.0 && std::isfinite(c.viscosity), c.viscosity,
      at("mu", c.viscosity), "viscosity uniformly positive and bounded");

  {
    // k_r in [0,1], increasing, k_r(s) s^-alpha_r -> k_r* > 0, alpha_r in (2/gamma, 14/3).
    bool ok = m.alpha_r > 2.0 / m.gamma && m.alpha_r < 14.0 / 3.0;
    double prev = -1.0;
    for (int k = 0; k <= 1000; ++k) {
      const double s = k / 1000.0;
      const double kr = rel_perm(m, s);
      ok = ok && kr >= 0.0 && kr <= 1.0 && kr >= prev;
      prev = kr;
    }
    ok = ok && rel_perm(m, 0.0) == 0.0 && rel_perm(m, 1.0) == 1.0;
    const double s_small = 1e-10;
    const double kstar = rel_perm(m, s_small) * std::pow(s_small, -m.alpha_r);
    ok = ok && kstar > 0.0 && std::isfinite(kstar);
    add("relperm_exponent", ok, m.alpha_r, at("alpha_r", m.alpha_r) + " k_r*=" + fmt(kstar),
        "2/gamma < alpha_r < 14/3, k_r monotone in [0,1]");
  }

  {
    // inf_{0<s<1/2} |P_c'| k_r^{q/(2(q-1))} / |f'| > 0 and gamma/(gamma-1) <= q < 2.
    bool ok = m.q >= m.gamma / (m.gamma - 1.0) && m.q < 2.0;
    double worst = std::numeric_limits<double>::infinity();
    double wit = 0.0;
    const double ex = m.q / (2.0 * (m.q - 1.0));
    for (double s : samples_below(0.5)) {
      const double r = std::abs(capillary_pressure_derivative(m, s)) * std::pow(rel_perm(m, s), ex) /
                       std::abs(dyn_capillary_derivative(c, s));
      if (r < worst) { worst = r; wit = s; }
    }
    ok = ok && worst > 1e-6;
    add("capillary_kr_ratio", ok, worst, at("s", wit), "inf |P_c'| k_r^{q/(2(q-1))}/|f'| > 0");
  }

  {
    // f -> -inf at 1 and |d sqrt(k_r)/ds| <= c' |f'|.
    bool ok = dyn_capillary(c, 1.0 - 1e-14) < dyn_capillary(c, 1.0 - 1e-7) - 1.0;
    double worst = 0.0;
    double wit = 0.0;
    const double h = 1e-7;
    for (int k = 1; k < 1000; ++k) {
      const double s = k / 1000.0;
      const double d = (std::sqrt(rel_perm(m, s + h)) - std::sqrt(rel_perm(m, s - h))) / (2 * h);
      const double r = std::abs(d) / std::abs(dyn_capillary_derivative(c, s));
      if (r > worst) { worst = r; wit = s; }
    }
    for (int k = 8; k <= 40; ++k) {
      const double s = std::pow(2.0, -k);
      const double d = (std::sqrt(rel_perm(m, 1.5 * s)) - std::sqrt(rel_perm(m, 0.5 * s))) / s;
      const double r = std::abs(d) / std::abs(dyn_capillary_derivative(c, s));
      if (r > worst) { worst = r; wit = s; }
    }
    ok = ok && worst < 1e6;
    add("capillary_f_growth", ok, worst, at("s", wit), "f(1-) = -inf, |(sqrt k_r)'| <= c'|f'|");
  }

  {
    const double f0 = dyn_capillary(c, 0.0);
    const double lam0 = capillary_floor_constant(m, c);
    bool ok = f0 > 0.0 && lam0 > m.p_at / f0 && c.s0 > 0.0 && c.s0 < 1.0;
    for (double s : samples_below(1.0)) ok = ok && capillary_pressure(m, s) > 0.0;
    add("capillary_floor_ratio", ok, lam0, at("lambda0", lam0) + " p_at/f(0)=" + fmt(m.p_at / f0),
        "f(0) > 0, P_c > 0, inf_{(0,s0)} P_c/f > p_at/f(0)");
  }

  add("capillary_blowup", m.k_p >= 0.0 && m.c_p > 0.0, m.c_p, at("k_p", m.k_p),
      "s^k_p P_c(s) -> c_p > 0 with k_p >= 0");

  {
    double inf_df = std::numeric_limits<double>::infinity();
    double wit = 0.0;
    for (double s : samples_below(1.0)) {
      const double d = std::abs(dyn_capillary_derivative(c, s));
      if (d < inf_df) { inf_df = d; wit = s; }
    }
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double integral = Quad::integrate(
        [&](double u) { return std::abs(dyn_capillary_derivative(c, u)) * std::abs(std::log(u)); }, 0.0,
        0.5, 20, 1e-10);
    const bool ok = inf_df > 0.0 && std::isfinite(integral);
    add("f_derivative_bounds", ok, inf_df, at("s", wit) + " integral=" + fmt(integral),
        "inf |f'| > 0, int_0^{1/2} |f'||log u| < inf");
  }

  {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int k = -60; k <= 60; ++k) {
      const double T = std::pow(10.0, k / 10.0);
      const double r = heat_conductivity(m, c, T) / (1.0 + std::pow(T, m.beta));
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    add("heat_conductivity", lo > 0.0 && std::isfinite(hi), lo, "kappa1=" + fmt(lo) + " kappa2=" + fmt(hi),
        "kappa1 (1+T^beta) <= kappa <= kappa2 (1+T^beta)");
  }

  {
    const bool ok = m.beta >= m.q / (2.0 - m.q) && m.beta > m.gamma / (m.gamma - 2.0) && m.beta >= 4.0 / 3.0;
    add("beta_exponent", ok, m.beta, at("beta", m.beta),
        "beta >= q/(2-q), beta > gamma/(gamma-2), beta >= 4/3");
  }

  if (N >= 1 && N <= kMaxSpecies) {
    const Eigen::MatrixXd L = onsager_matrix(c, N);
    double bound = 0.0;
    double cmin = std::numeric_limits<double>::infinity();
    double cmax = 0.0;
    bool psd_ok = (L - L.transpose()).norm() < 1e-14;
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> rho(static_cast<size_t>(N));
      for (auto& r : rho) r = std::exp(8.0 * unit(rng) - 4.0);
      const double T = std::exp(8.0 * unit(rng) - 4.0);
      const auto li0 = onsager_cross(c, rho, T);
      for (int i = 0; i < N; ++i) {
        double row = std::abs(li0[static_cast<size_t>(i)]) / T;
        for (int j = 0; j < N; ++j) row += std::abs(L(i, j));
        bound = std::max(bound, row);
      }
      const auto u = random_vector(rng, N, 1.0);
      const Eigen::Map<const Eigen::VectorXd> uv(u.data(), N);
      const double quad = uv.dot(L * uv);
      const double np = norm_pi(u);
      if (np * np > 1e-14) {
        cmin = std::min(cmin, quad / (np * np));
        cmax = std::max(cmax, quad / (np * np));
      } else {
        psd_ok = psd_ok && std::abs(quad) < 1e-12;
      }
    }
    add("onsager_bounds", std::isfinite(bound), bound, "sup=" + fmt(bound),
        "|L~_ij| + |L~_i0|/T <= C");
    if (N == 1) cmin = cmax = 0.0;
    const bool ok = psd_ok && (N == 1 || (cmin > 0.0 && std::isfinite(cmax)));
    add("onsager_coercivity", ok, cmin, "C=" + fmt(cmin) + " C'=" + fmt(cmax),
        "C |Pi u|^2 <= u.L~u <= C' |Pi u|^2");

    const Eigen::MatrixXd b = c.b(N);
    const double sym = (b - b.transpose()).cwiseAbs().maxCoeff();
    const double colsum = b.colwise().sum().cwiseAbs().maxCoeff();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b + b.transpose()));
    const double min_ev = es.eigenvalues().minCoeff();
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    const bool bok = sym <= 1e-14 * scale && colsum <= 1e-12 * scale && min_ev >= -1e-12 * scale;
    add("boundary_matrix", bok, colsum, "colsum=" + fmt(colsum) + " min_eig=" + fmt(min_ev),
        "b symmetric PSD with zero column sums");

    double bal = 0.0;
    double growth = -std::numeric_limits<double>::infinity();
    double c2 = 0.0;
    double convex = -std::numeric_limits<double>::infinity();
    double cont = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const double sc = std::exp(6.0 * unit(rng) - 3.0);
      const auto z = random_vector(rng, N, sc);
      const auto z2 = random_vector(rng, N, sc);
      const auto r = reaction_tilde(m, c, z);
      double s = 0.0, sz = 0.0, sa = 0.0, mag = 0.0;
      for (int i = 0; i < N; ++i) {
        s += r[static_cast<size_t>(i)];
        sz += r[static_cast<size_t>(i)] * z[static_cast<size_t>(i)];
        sa += std::abs(r[static_cast<size_t>(i)]);
        mag = std::max(mag, std::abs(r[static_cast<size_t>(i)]));
      }
      bal = std::max(bal, std::abs(s) / std::max(1.0, mag));
      const double np = norm_pi(z);
      growth = std::max(growth, sz + c.C1 * std::pow(np, m.a));
      c2 = std::max(c2, sa / (1.0 + std::pow(np, m.a - 1.0)));
      // Midpoint convexity of zeta -> -sum r~ zeta.
      auto phi = [&](const std::vector<double>& v) {
        const auto rv = reaction_tilde(m, c, v);
        double acc = 0.0;
        for (int i = 0; i < N; ++i) acc -= rv[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
        return acc;
      };
      std::vector<double> mid(static_cast<size_t>(N));
      for (int i = 0; i < N; ++i) mid[static_cast<size_t>(i)] = 0.5 * (z[static_cast<size_t>(i)] + z2[static_cast<size_t>(i)]);
      const double gap = phi(mid) - 0.5 * (phi(z) + phi(z2));
      convex = std::max(convex, gap / std::max(1.0, std::abs(phi(z)) + std::abs(phi(z2))));
      // The default r~ does not depend on (rho, T).
      const double T1 = std::exp(unit(rng)), T2 = std::exp(unit(rng));
      const auto ra = reaction_terms(m, c, 1.0, T1, z, 0.0);
      const auto rb = reaction_terms(m, c, 2.0, T2, z, 0.0);
      for (int i = 0; i < N; ++i) cont = std::max(cont, std::abs(ra[static_cast<size_t>(i)] - rb[static_cast<size_t>(i)]));
    }
    add("reaction_balance", bal <= 1e-12, bal, "max |sum r~|", "sum_j r~_j = 0");
    add("reaction_growth", c.C1 >= 0.0 && m.a > 2.0 && growth <= 1e-9 && std::isfinite(c2), growth,
        "C1=" + fmt(c.C1) + " a=" + fmt(m.a) + " C2=" + fmt(c2),
        "sum r~ zeta <= C0 - C1 |Pi zeta|^a, sum |r~| <= C2 (1 + |Pi zeta|^(a-1))");
    add("reaction_convexity", convex <= 1e-12, convex, "max midpoint gap",
        "zeta -> -sum r~ zeta convex");
    add("reaction_continuity", cont <= 1e-12, cont, "max |r~(rho,T) - r~(rho',T')|",
        "r~ continuous in (rho, T) uniformly on |zeta|^a");
  }

  {
    bool k1;
    if (m.alpha_r <= 4.0 / 3.0) {
      k1 = m.K1 > 1.2 * m.gamma;
    } else {
      k1 = m.K1 > 1.2 * m.gamma && m.K1 < (3 * m.alpha_r - 2) / (3 * m.alpha_r - 4) * m.gamma;
    }
    const bool k2 = m.K2 > 3.0 && m.K2 < 3.0 * m.beta;
    const double k3min = (5 * m.K1 + 6 * m.gamma) / (5 * m.K1 - 6 * m.gamma);
    const bool k3 = 5 * m.K1 > 6 * m.gamma && m.K3 > k3min;
    add("regularization_exponents", k1 && k2 && k3, m.K3 - k3min,
        "K1=" + fmt(m.K1) + " K2=" + fmt(m.K2) + " K3=" + fmt(m.K3) + " K3min=" + fmt(k3min),
        "constraints on K1, K2, K3");
  }

  add("porosity_bounds", c.porosity > 0.0 && c.porosity < 1.0, c.porosity, at("Phi", c.porosity),
      "0 < ess inf Phi, ess sup Phi < 1");

  {
    const double bound = saturation_floor_eps_bound(m, c);
    add("saturation_floor_eps", m.eps >= 0.0 && m.eps < bound, m.eps, "bound=" + fmt(bound),
        "0 <= eps < min(s0, f^-1(p_at/lambda0))");
  }

  add("scheme_parameters", m.tau > 0.0 && m.delta >= 0.0 && m.c_w > 0.0 && m.c_s > 0.0 &&
                               m.p_at > 0.0 && m.K > 0.0 && m.alpha >= 0.0 && m.T0 > 0.0 &&
                               (m.mu0.empty() || static_cast<int>(m.mu0.size()) == N),
      m.tau, at("tau", m.tau), "tau > 0, delta >= 0, positive constants, mu0 of length N");

  return rep;
}

}  // namespace nrflow
