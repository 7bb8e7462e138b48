#pragma once

// Free energy, derived thermodynamic quantities, closures and the Onsager
// flux law. Everything scalar-valued is templated on the scalar type so the
// same code serves the residual (double) and its Jacobian (Dual).

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nrflow/dual.hpp"
#include "nrflow/params.hpp"
#include "nrflow/roots.hpp"

namespace nrflow {

namespace detail {

template <class V>
void check_density(const V& rho, const char* who) {
  if (rho.size() == 0 || rho.size() > static_cast<size_t>(kMaxSpecies)) {
    throw std::invalid_argument(std::string(who) + ": species count out of range");
  }
  for (const auto& r : rho) {
    if (!(value(r) > 0.0)) throw std::domain_error(std::string(who) + ": density must be positive");
  }
}

template <class S>
void check_temperature(const S& T, const char* who) {
  if (!(value(T) > 0.0)) throw std::domain_error(std::string(who) + ": temperature must be positive");
}

template <class V>
auto sum(const V& v) {
  typename V::value_type s = 0.0;
  for (const auto& x : v) s += x;
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Closures

template <class S>
S rel_perm(const ModelParams& m, const S& s) {
  if (s <= 0.0) return S(0.0);
  if (s >= 1.0) return S(1.0);
  return pow(s, m.alpha_r);
}

template <class S>
S capillary_pressure(const ModelParams& m, const S& s) {
  return m.c_p * pow(s, -m.k_p);
}

inline double capillary_pressure_derivative(const ModelParams& m, double s) {
  return -m.k_p * m.c_p * std::pow(s, -m.k_p - 1.0);
}

/// P_c(s), with an extra -eps log s when the closure does not blow up at 0.
template <class S>
S capillary_pressure_reg(const ModelParams& m, const S& s, double eps) {
  if (!(value(s) > 0.0 && value(s) <= 1.0)) {
    throw std::domain_error("capillary_pressure_reg: saturation outside (0,1)");
  }
  S pc = capillary_pressure(m, s);
  if (m.k_p == 0.0) pc -= eps * log(s);
  return pc;
}

inline double capillary_pressure_reg_derivative(const ModelParams& m, double s, double eps) {
  double d = capillary_pressure_derivative(m, s);
  if (m.k_p == 0.0) d -= eps / s;
  return d;
}

/// Antiderivative G of the regularized capillary pressure, G' = P_c,eps.
template <class S>
S capillary_antiderivative(const ModelParams& m, const S& s, double eps) {
  S g = (m.k_p == 1.0) ? m.c_p * log(s) : m.c_p * pow(s, 1.0 - m.k_p) / (1.0 - m.k_p);
  if (m.k_p == 0.0) g -= eps * (s * log(s) - s);
  return g;
}

/// Dynamic capillary potential f(s) = A + B log(1 - s).
template <class S>
S dyn_capillary(const Closures& c, const S& s) {
  return c.f_A + c.f_B * log(1.0 - s);
}

inline double dyn_capillary_derivative(const Closures& c, double s) { return -c.f_B / (1.0 - s); }

inline double dyn_capillary_inverse(const Closures& c, double y) {
  return 1.0 - std::exp((y - c.f_A) / c.f_B);
}

template <class S>
S viscosity(const Closures& c, const S& /*T*/) {
  return S(c.viscosity);
}

template <class S>
S heat_conductivity(const ModelParams& m, const Closures& c, const S& T) {
  return c.kappa1 * (1.0 + pow(T, m.beta));
}

/// lambda(S, T) = k_r(S) / mu(T).
template <class S>
S mobility(const ModelParams& m, const Closures& c, const S& sat, const S& T) {
  return rel_perm(m, sat) / viscosity(c, T);
}

// ---------------------------------------------------------------------------
// Water thermodynamics

template <class V, class S = typename V::value_type>
S free_energy_water(const ModelParams& m, const V& rho, const S& T, double eps) {
  detail::check_density(rho, "free_energy_water");
  detail::check_temperature(T, "free_energy_water");
  S entropic = 0.0;
  for (const auto& r : rho) entropic += r * log(r);
  const S rt = detail::sum(rho);
  return T * entropic + pow(rt, m.gamma) - m.c_w * rt * T * log(T) + m.p_at + eps * pow(rt, m.K1);
}

template <class V, class S = typename V::value_type>
SpeciesVec<S> chemical_potentials(const ModelParams& m, const V& rho, const S& T, double eps) {
  detail::check_density(rho, "chemical_potentials");
  detail::check_temperature(T, "chemical_potentials");
  const S rt = detail::sum(rho);
  const S common = m.gamma * pow(rt, m.gamma - 1.0) - m.c_w * T * log(T) +
                   eps * m.K1 * pow(rt, m.K1 - 1.0);
  SpeciesVec<S> mu;
  for (const auto& r : rho) mu.push_back(T * (log(r) + 1.0) + common);
  return mu;
}

template <class V, class S = typename V::value_type>
S pressure(const ModelParams& m, const V& rho, const S& T, double eps) {
  detail::check_density(rho, "pressure");
  detail::check_temperature(T, "pressure");
  const S rt = detail::sum(rho);
  return T * rt + (m.gamma - 1.0) * pow(rt, m.gamma) - m.p_at + eps * (m.K1 - 1.0) * pow(rt, m.K1);
}

/// Pressure as a function of total density only (used on hot paths).
template <class S>
S pressure_total(const ModelParams& m, const S& rt, const S& T, double eps) {
  return T * rt + (m.gamma - 1.0) * pow(rt, m.gamma) - m.p_at + eps * (m.K1 - 1.0) * pow(rt, m.K1);
}

template <class S>
S internal_energy_total(const ModelParams& m, const S& rt, const S& T, double eps) {
  return pow(rt, m.gamma) + m.c_w * rt * T + m.p_at + eps * pow(rt, m.K1);
}

template <class V, class S = typename V::value_type>
S internal_energy(const ModelParams& m, const V& rho, const S& T, double eps) {
  for (const auto& r : rho) {
    if (value(r) < 0.0) throw std::domain_error("internal_energy: density must be nonnegative");
  }
  detail::check_temperature(T, "internal_energy");
  return internal_energy_total(m, S(detail::sum(rho)), T, eps);
}

template <class V, class S = typename V::value_type>
S water_entropy(const ModelParams& m, const V& rho, const S& T) {
  detail::check_density(rho, "water_entropy");
  detail::check_temperature(T, "water_entropy");
  S s = 0.0;
  for (const auto& r : rho) s -= r * log(r);
  const S rt = detail::sum(rho);
  return s + m.c_w * rt * (log(T) + 1.0);
}

/// Skeleton entropy and energy densities (eta_s, E_s).
template <class S>
std::pair<S, S> skeleton_entropy_energy(const ModelParams& m, const S& T, double eps) {
  detail::check_temperature(T, "skeleton_entropy_energy");
  const S eta = m.c_s - 1.0 + m.c_s * log(T) + eps * m.K2 * pow(T, m.K2 - 1.0);
  const S e = m.c_s * T + eps * (m.K2 - 1.0) * pow(T, m.K2);
  return {eta, e};
}

/// E_f,eps = (rho e) S - int_{1/2}^S P_c,eps, using the closed-form antiderivative.
template <class S>
S fluid_energy(const ModelParams& m, const S& rhoe, const S& sat, double eps) {
  return rhoe * sat - (capillary_antiderivative(m, sat, eps) - capillary_antiderivative(m, 0.5, eps));
}

/// (E_int, E_f,eps) at saturation S, integrals by adaptive Gauss-Kronrod.
std::pair<double, double> interfacial_and_fluid_energy(const ModelParams& m,
                                                       const std::vector<double>& rho,
                                                       double T, double S, double eps);

/// All derived quantities at one state point.
struct ThermoPoint {
  std::vector<double> rho;
  double T = 1.0;
  double eps = 0.0;
  std::vector<double> mu;
  double p = 0.0;
  double rhoe = 0.0;
  double rhoeta = 0.0;

  static ThermoPoint make(const ModelParams& m, const std::vector<double>& rho, double T,
                          double eps);
  /// p + rhoe - sum rho_i mu_i - T rhoeta, relative to the largest term.
  double euler_residual() const;
};

// ---------------------------------------------------------------------------
// Projector, reactions, Onsager fluxes

template <class V, class S = typename V::value_type>
SpeciesVec<S> projector(const V& u) {
  S mean = 0.0;
  for (const auto& x : u) mean += x;
  mean = mean / static_cast<double>(u.size());
  SpeciesVec<S> out;
  for (const auto& x : u) out.push_back(x - mean);
  return out;
}

/// Default r~: -C1 |Pi zeta|^(a-2) Pi zeta.
template <class V, class S = typename V::value_type>
SpeciesVec<S> reaction_tilde(const ModelParams& m, const Closures& c, const V& zeta) {
  SpeciesVec<S> pz = projector(zeta);
  S n2 = 0.0;
  for (const auto& x : pz) n2 += x * x;
  const S scale = -c.C1 * pow(sqrt(n2), m.a - 2.0);
  for (auto& x : pz) x = scale * x;
  return pz;
}

/// r_i,eps = r~_i - eps |zeta_i|^(a-2) zeta_i.
template <class V, class S = typename V::value_type>
SpeciesVec<S> reaction_terms(const ModelParams& m, const Closures& c, const S& /*rho_total*/,
                             const S& T, const V& zeta, double eps) {
  detail::check_temperature(T, "reaction_terms");
  SpeciesVec<S> r = reaction_tilde(m, c, zeta);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= eps * signed_power(zeta[i], m.a - 1.0);
  return r;
}

/// Cross coefficients L~_i0 = c0 T rho_i / (1 + rho).
template <class V, class S = typename V::value_type>
SpeciesVec<S> onsager_cross(const Closures& c, const V& rho, const S& T) {
  const S rt = detail::sum(rho);
  SpeciesVec<S> l;
  for (const auto& r : rho) l.push_back(c.c0 * T * r / (1.0 + rt));
  return l;
}

/// L00 = kappa(T) T^2.
template <class S>
S onsager_heat(const ModelParams& m, const Closures& c, const S& T) {
  return heat_conductivity(m, c, T) * T * T;
}

/// Full L~ matrix (D Pi for the default closure).
Eigen::MatrixXd onsager_matrix(const Closures& c, int N);

/// Species fluxes along one direction given the scalar components of
/// grad(mu/T) and grad(1/T): J_i = L_i0 g_beta - sum_j L_ij g_zeta_j.
template <class V, class S = typename V::value_type>
SpeciesVec<S> species_flux(const Closures& c, const SpeciesVec<S>& li0, const V& g_zeta,
                           const S& g_beta) {
  SpeciesVec<S> pg = projector(g_zeta);
  SpeciesVec<S> J;
  for (size_t i = 0; i < pg.size(); ++i) J.push_back(li0[i] * g_beta - c.D * pg[i]);
  return J;
}

/// Heat flux along one direction: q = L00 g_beta + sum_j L_0j g_zeta_j.
template <class V, class S = typename V::value_type>
S heat_flux(const SpeciesVec<S>& li0, const S& l00, const V& g_zeta, const S& g_beta) {
  S q = l00 * g_beta;
  for (size_t j = 0; j < li0.size(); ++j) q += li0[j] * g_zeta[j];
  return q;
}

struct OnsagerFluxes {
  Eigen::MatrixXd J;  // N x dim
  Eigen::VectorXd q;  // dim
};

/// Multi-dimensional flux evaluation. grad_zeta is N x dim, grad_invT has length dim.
OnsagerFluxes onsager_fluxes(const ModelParams& m, const Closures& c, const std::vector<double>& rho,
                             double T, const Eigen::MatrixXd& grad_zeta,
                             const Eigen::VectorXd& grad_invT);

/// -sum grad(z_i).J_i + grad(1/T).q evaluated from the fluxes.
double flux_entropy_production(const OnsagerFluxes& f, const Eigen::MatrixXd& grad_zeta,
                               const Eigen::VectorXd& grad_invT);

/// sum L_ij grad z_i . grad z_j + L00 |grad(1/T)|^2.
double quadratic_entropy_production(const ModelParams& m, const Closures& c,
                                    const std::vector<double>& rho, double T,
                                    const Eigen::MatrixXd& grad_zeta,
                                    const Eigen::VectorXd& grad_invT);

// ---------------------------------------------------------------------------
// Density inversion from entropy variables

/// Scalar equation in x = log rho:
///   x + (gamma/T) e^{(gamma-1)x} + (eps K1/T) e^{(K1-1)x} = L,
/// L = log sum_i exp(z_i + c_w w - 1). Returns x.
double solve_log_density(const ModelParams& m, double L, double T, double eps);

template <class V, class S = typename V::value_type>
SpeciesVec<S> densities_from_entropy_vars(const ModelParams& m, const V& z, const S& w,
                                          double eps) {
  if (z.size() == 0 || z.size() > static_cast<size_t>(kMaxSpecies)) {
    throw std::invalid_argument("densities_from_entropy_vars: species count out of range");
  }
  const S T = exp(w);
  S zmax = z[0];
  for (const auto& x : z) {
    if (!std::isfinite(value(x))) throw std::domain_error("densities_from_entropy_vars: z not finite");
    if (x > zmax) zmax = x;
  }
  S acc = 0.0;
  for (const auto& x : z) acc += exp(x - zmax);
  const S L = zmax + log(acc) + m.c_w * w - 1.0;

  const double x0 = solve_log_density(m, value(L), value(T), eps);
  // One Newton correction in the scalar type carries the implicit derivative.
  const double e1 = std::exp((m.gamma - 1.0) * x0);
  const double e2 = std::exp((m.K1 - 1.0) * x0);
  const S g = x0 + (m.gamma / T) * e1 + (eps * m.K1 / T) * e2 - L;
  const double dg = 1.0 + (m.gamma * (m.gamma - 1.0) / value(T)) * e1 +
                    (eps * m.K1 * (m.K1 - 1.0) / value(T)) * e2;
  const S x = x0 - g / dg;
  const S rt = exp(x);

  const S shift = m.c_w * w - 1.0 - m.gamma * pow(rt, m.gamma - 1.0) / T -
                  eps * m.K1 * pow(rt, m.K1 - 1.0) / T;
  SpeciesVec<S> rho;
  for (const auto& zi : z) rho.push_back(exp(zi + shift));
  return rho;
}

// ---------------------------------------------------------------------------
// Saturation update

/// Root in (0,1) of s -> f(s) - f(S_prev) + tau sigma (P_c,eps(s) + p).
double saturation_root(const ModelParams& m, const Closures& c, double S_prev, double p,
                       double tau, double eps, double sigma = 1.0);

template <class S>
S saturation_update(const ModelParams& m, const Closures& c, double S_prev, const S& p,
                    double tau, double eps, double sigma = 1.0) {
  const double s0 = saturation_root(m, c, S_prev, value(p), tau, eps, sigma);
  if constexpr (std::is_same_v<S, double>) {
    return s0;
  } else {
    const S h = dyn_capillary(c, s0) - dyn_capillary(c, S_prev) +
                tau * sigma * (capillary_pressure_reg(m, s0, eps) + p);
    const double dh = dyn_capillary_derivative(c, s0) +
                      tau * sigma * capillary_pressure_reg_derivative(m, s0, eps);
    return S(s0) - h / dh;
  }
}

/// Per-field convenience wrapper.
std::vector<double> saturation_update_field(const ModelParams& m, const Closures& c,
                                            const std::vector<double>& S_prev,
                                            const std::vector<double>& p, double tau, double eps);

}  // namespace nrflow
