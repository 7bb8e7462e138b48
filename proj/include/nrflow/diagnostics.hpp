#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nrflow/residual.hpp"
#include "nrflow/state.hpp"

namespace nrflow {

/// The five entropy production densities per cell (per unit volume).
/// Face terms are split evenly between the two adjacent cells.
struct ProductionField {
  std::vector<double> darcy;       // K lambda / T |grad p|^2
  std::vector<double> diffusion;   // sum L_ij grad z_i . grad z_j
  std::vector<double> heat;        // L00 |grad(1/T)|^2
  std::vector<double> saturation;  // -Phi/T f'(S) (dS/dt)^2 in backward-difference form
  std::vector<double> reaction;    // -sum r_i,eps z_i

  std::vector<double> total() const;
  double integral(double vol) const;
  double min_term() const;
};

ProductionField entropy_production_field(const Problem& pb, const EntropyState& state_k,
                                         const EntropyState& state_km1);

/// Total entropy sum vol [Phi S rho eta + (1 - Phi) eta_s].
double total_entropy(const Problem& pb, const EntropyState& st);

/// Total energy sum vol [Phi E_f + (1 - Phi) E_s].
double total_energy(const Problem& pb, const EntropyState& st);

/// sum vol [Phi (E_f - S rho eta) + (1 - Phi)(E_s - eta_s)].
double lyapunov(const Problem& pb, const EntropyState& st);

/// Boundary entropy exchange sum_bf area [sum_i z_i b_il (z_l - z0_l) - alpha (T - T0)/T].
double boundary_entropy_flux(const Problem& pb, const EntropyState& st);

/// Regularizer contribution to the entropy balance:
/// sum vol [sum_i z_i reg_i - (1/T) reg_E] / tau.
double regularizer_entropy_term(const Problem& pb, const EntropyState& st);

/// tau^-1 (H_k - H_{k-1}) - boundary - production - regularizer. Equals the
/// cellwise concavity gap divided by tau, so it is nonnegative up to the
/// solver tolerance.
double entropy_balance_residual(const Problem& pb, const EntropyState& state_k, const EntropyState& state_km1);

/// Delta E_total + tau alpha sum_bf area (T - T0) + tau eps sum vol (1 + T^-K3) log T.
double energy_budget(const Problem& pb, const EntropyState& state_k, const EntropyState& state_km1);

/// Per species: sum vol Phi Delta(S rho_i) + tau [boundary b-term - sum vol r_i,eps + eps sum vol z_i].
std::vector<double> mass_budget(const Problem& pb, const EntropyState& state_k, const EntropyState& state_km1);

/// Total species mass sum vol Phi S rho_i.
std::vector<double> species_mass(const Problem& pb, const EntropyState& st);

/// Discrete norms of one state. Names are stable and used as CSV columns.
std::vector<std::pair<std::string, double>> state_monitors(const Problem& pb, const EntropyState& st);

/// Aggregated monitor table over a trajectory of per-step monitor values:
/// the sup in time for state norms and the tau-weighted sum for squared
/// gradient norms.
std::vector<std::pair<std::string, double>> apriori_monitors(
    const std::vector<std::vector<std::pair<std::string, double>>>& per_step, double tau);

struct GibbsDuhemAudit {
  double max_residual = 0.0;
  int worst_face = -1;
};

/// Face residual of grad(rho eta) + sum z_i grad rho_i - (1/T) grad(rho e) with
/// left-cell coefficients, divided by the face distance.
GibbsDuhemAudit gibbs_duhem_audit(const Problem& pb, const EntropyState& st);

struct DiagnosticsRecord {
  long step = 0;
  double time = 0.0;
  double entropy_production = 0.0;
  double energy_residual = 0.0;
  std::vector<double> mass_residual;
  double lyapunov = 0.0;
  double sat_min = 0.0;
  double rho_min = 0.0;
  double T_min = 0.0;
  double T_max = 0.0;
  double entropy_balance = 0.0;
  double balance_weight = 0.0;  // 1 + max |z| + max 1/T, scales the balance slack
  double production_min = 0.0;
  std::vector<std::pair<std::string, double>> monitors;
};

/// Record for the initial snapshot (no step differences) or an accepted step.
DiagnosticsRecord make_record(const Problem& pb, long step, double time, const EntropyState& st,
                              const EntropyState* prev);

std::vector<std::string> csv_header(int N);
std::vector<double> csv_row(const DiagnosticsRecord& r);

struct InvariantViolation {
  long step = 0;
  std::string name;
  double value = 0.0;
  double bound = 0.0;
};

struct InvariantTolerances {
  double newton_tol = 1e-10;
  bool check_floor = true;     // eps is below the saturation floor bound
  bool check_lyapunov = false; // isolated configuration with delta = 0
  double scale = 1.0;
};

/// Positivity, saturation floor, production sign, budget closure and
/// (optionally) Lyapunov monotonicity, checked independently of the solver.
std::vector<InvariantViolation> check_invariants(const Problem& pb, const DiagnosticsRecord& rec,
                                                 const DiagnosticsRecord* prev_rec, const InvariantTolerances& tol);

/// True if no entropy crosses the boundary: alpha = 0 and b = 0.
bool is_isolated(const Problem& pb);

}  // namespace nrflow
