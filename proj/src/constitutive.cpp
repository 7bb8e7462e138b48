#include "nrflow/constitutive.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace nrflow {

Eigen::MatrixXd Closures::b(int N) const {
  if (b_matrix) {
    if (b_matrix->rows() != N || b_matrix->cols() != N) {
      throw std::invalid_argument("boundary matrix must be N x N");
    }
    return *b_matrix;
  }
  Eigen::MatrixXd pi = Eigen::MatrixXd::Identity(N, N);
  pi.array() -= 1.0 / N;
  return b_scale * pi;
}

std::pair<double, double> interfacial_and_fluid_energy(const ModelParams& m,
                                                       const std::vector<double>& rho,
                                                       double T, double S, double eps) {
  if (!(S > 0.0 && S < 1.0)) {
    throw std::domain_error("interfacial_and_fluid_energy: saturation outside (0,1)");
  }
  auto pc = [&](double s) { return capillary_pressure_reg(m, s, eps); };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr unsigned kDepth = 30;
  constexpr double kTol = 1e-13;
  const double e_int = Quad::integrate(pc, S, 1.0, kDepth, kTol);
  const double from_half = Quad::integrate(pc, 0.5, S, kDepth, kTol);
  const double rhoe = internal_energy(m, rho, T, eps);
  return {e_int, rhoe * S - from_half};
}

ThermoPoint ThermoPoint::make(const ModelParams& m, const std::vector<double>& rho, double T,
                              double eps) {
  ThermoPoint tp;
  tp.rho = rho;
  tp.T = T;
  tp.eps = eps;
  const auto mu = chemical_potentials(m, rho, T, eps);
  tp.mu.assign(mu.begin(), mu.end());
  tp.p = pressure(m, rho, T, eps);
  tp.rhoe = internal_energy(m, rho, T, eps);
  tp.rhoeta = water_entropy(m, rho, T);
  return tp;
}

double ThermoPoint::euler_residual() const {
  double rm = 0.0;
  double scale = std::max({std::abs(p), std::abs(rhoe), std::abs(T * rhoeta)});
  for (size_t i = 0; i < rho.size(); ++i) {
    rm += rho[i] * mu[i];
    scale = std::max(scale, std::abs(rho[i] * mu[i]));
  }
  return (p + rhoe - rm - T * rhoeta) / std::max(scale, 1e-300);
}

Eigen::MatrixXd onsager_matrix(const Closures& c, int N) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(N, N);
  L.array() -= 1.0 / N;
  return c.D * L;
}

OnsagerFluxes onsager_fluxes(const ModelParams& m, const Closures& c, const std::vector<double>& rho,
                             double T, const Eigen::MatrixXd& grad_zeta,
                             const Eigen::VectorXd& grad_invT) {
  detail::check_density(rho, "onsager_fluxes");
  detail::check_temperature(T, "onsager_fluxes");
  const int N = static_cast<int>(rho.size());
  if (grad_zeta.rows() != N || grad_zeta.cols() != grad_invT.size()) {
    throw std::invalid_argument("onsager_fluxes: gradient shape mismatch");
  }
  const Eigen::MatrixXd L = onsager_matrix(c, N);
  const auto li0 = onsager_cross(c, rho, T);
  const double l00 = onsager_heat(m, c, T);
  Eigen::VectorXd l0 = Eigen::Map<const Eigen::VectorXd>(li0.data(), N);

  OnsagerFluxes out;
  out.J = l0 * grad_invT.transpose() - L * grad_zeta;
  out.q = l00 * grad_invT + grad_zeta.transpose() * l0;
  return out;
}

double flux_entropy_production(const OnsagerFluxes& f, const Eigen::MatrixXd& grad_zeta,
                               const Eigen::VectorXd& grad_invT) {
  return -(grad_zeta.array() * f.J.array()).sum() + grad_invT.dot(f.q);
}

double quadratic_entropy_production(const ModelParams& m, const Closures& c,
                                    const std::vector<double>& rho, double T,
                                    const Eigen::MatrixXd& grad_zeta,
                                    const Eigen::VectorXd& grad_invT) {
  const Eigen::MatrixXd L = onsager_matrix(c, static_cast<int>(rho.size()));
  return (grad_zeta.transpose() * L * grad_zeta).trace() +
         onsager_heat(m, c, T) * grad_invT.squaredNorm();
}

double solve_log_density(const ModelParams& m, double L, double T, double eps) {
  const double a1 = m.gamma / T;
  const double a2 = eps * m.K1 / T;
  auto g = [&](double x) {
    const double e1 = std::exp((m.gamma - 1.0) * x);
    const double e2 = a2 > 0.0 ? std::exp((m.K1 - 1.0) * x) : 0.0;
    // Scaled by the term magnitude; the Newton step is unchanged.
    const double s = 1.0 + std::abs(x) + a1 * e1 + a2 * e2 + std::abs(L);
    return std::pair<double, double>{
        (x + a1 * e1 + a2 * e2 - L) / s,
        (1.0 + a1 * (m.gamma - 1.0) * e1 + a2 * (m.K1 - 1.0) * e2) / s};
  };
  // Upper end: x <= L, and the power terms alone exceed L - x beyond the caps.
  double hi = L;
  const double budget = 2.0 * (std::abs(L) + 1.0);
  double cap = std::log(budget / a1) / (m.gamma - 1.0);
  if (a2 > 0.0) cap = std::min(cap, std::log(budget / a2) / (m.K1 - 1.0));
  if (cap < hi) {
    const double gc = g(cap).first;
    if (std::isfinite(gc) && gc > 0.0) hi = cap;
  }
  double width = 1.0;
  double lo = hi - width;
  for (int k = 0; g(lo).first > 0.0; ++k) {
    if (k > 80) throw ConvergenceError("solve_log_density: no lower bracket");
    width *= 2.0;
    lo = hi - width;
  }
  return safeguarded_newton(g, lo, hi, lo, 1e-15, 200, 1e-15).x;
}

double saturation_root(const ModelParams& m, const Closures& c, double S_prev, double p,
                       double tau, double eps, double sigma) {
  if (!(S_prev > 0.0 && S_prev < 1.0)) {
    throw std::domain_error("saturation_update: previous saturation outside (0,1)");
  }
  const double f_prev = dyn_capillary(c, S_prev);
  const double ts = tau * sigma;
  auto h = [&](double s) {
    return std::pair<double, double>{
        dyn_capillary(c, s) - f_prev + ts * (capillary_pressure_reg(m, s, eps) + p),
        dyn_capillary_derivative(c, s) + ts * capillary_pressure_reg_derivative(m, s, eps)};
  };
  const double h0 = h(S_prev).first;
  if (h0 == 0.0) return S_prev;

  // h is strictly decreasing: walk toward the side where it changes sign.
  double lo = S_prev;
  double hi = S_prev;
  if (h0 > 0.0) {
    double gap = 1.0 - S_prev;
    for (int k = 0;; ++k) {
      gap *= 0.5;
      hi = 1.0 - gap;
      if (hi <= S_prev) hi = std::nextafter(S_prev, 1.0);
      if (h(hi).first < 0.0) break;
      if (k > 1000 || hi >= 1.0) throw ConvergenceError("saturation_update: bracket failure near 1");
      lo = hi;
    }
  } else {
    double gap = S_prev;
    for (int k = 0;; ++k) {
      gap *= 0.5;
      lo = gap;
      if (h(lo).first > 0.0) break;
      if (k > 1000 || lo <= 0.0) throw ConvergenceError("saturation_update: bracket failure near 0");
      hi = lo;
    }
  }
  const double scale = std::max({1.0, std::abs(f_prev), ts * std::abs(p)});
  return safeguarded_newton(h, lo, hi, S_prev, 1e-14 * scale).x;
}

std::vector<double> saturation_update_field(const ModelParams& m, const Closures& c,
                                            const std::vector<double>& S_prev,
                                            const std::vector<double>& p, double tau, double eps) {
  if (S_prev.size() != p.size()) throw std::invalid_argument("saturation_update: size mismatch");
  std::vector<double> out(S_prev.size());
  for (size_t i = 0; i < S_prev.size(); ++i) out[i] = saturation_root(m, c, S_prev[i], p[i], tau, eps);
  return out;
}

}  // namespace nrflow
