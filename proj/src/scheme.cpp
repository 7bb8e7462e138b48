#include "nrflow/scheme.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/SparseLU>

namespace nrflow {

namespace {

double max_norm(const Eigen::VectorXd& r) { return r.size() ? r.cwiseAbs().maxCoeff() : 0.0; }

bool try_residual(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x, double sigma,
                  const SchemeConfig& cfg, Eigen::VectorXd& r) {
  try {
    r = residual(pb, ctx, x, sigma, cfg.exec);
  } catch (const std::exception&) {
    return false;
  }
  return r.allFinite();
}

bool solve_linear(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& rhs, Eigen::VectorXd& dx) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(J);
  lu.factorize(J);
  if (lu.info() != Eigen::Success) return false;
  dx = lu.solve(rhs);
  return lu.info() == Eigen::Success && dx.allFinite();
}

// Backtracking along dx until the 2-norm satisfies the Armijo condition.
bool line_search(const Problem& pb, const StepContext& ctx, Eigen::VectorXd& x, Eigen::VectorXd& r,
                 const Eigen::VectorXd& dx, double sigma, const SchemeConfig& cfg) {
  const double n0 = r.norm();
  Eigen::VectorXd rt;
  for (double t = 1.0; t >= cfg.min_step; t *= cfg.backtrack) {
    const Eigen::VectorXd xt = x + t * dx;
    if (try_residual(pb, ctx, xt, sigma, cfg, rt) && rt.norm() <= (1.0 - cfg.armijo * t) * n0) {
      x = xt;
      r = rt;
      return true;
    }
  }
  return false;
}

}  // namespace

NewtonResult newton_solve(const Problem& pb, const StepContext& ctx, Eigen::VectorXd& x, double sigma,
                          const SchemeConfig& cfg) {
  NewtonResult res;
  Eigen::VectorXd r;
  if (!try_residual(pb, ctx, x, sigma, cfg, r)) {
    res.reason = "residual not computable at initial guess";
    return res;
  }
  res.history.push_back(max_norm(r));
  int polished = 0;
  for (int it = 0; it < cfg.max_newton + cfg.polish; ++it) {
    const double nr = max_norm(r);
    if (nr <= cfg.newton_tol) {
      res.converged = true;
      if (polished >= cfg.polish || nr == 0.0) break;
    } else if (it >= cfg.max_newton) {
      break;
    }
    Eigen::VectorXd dx;
    if (!solve_linear(jacobian(pb, ctx, x, sigma, cfg.exec), -r, dx)) {
      res.reason = "singular Jacobian";
      break;
    }
    if (res.converged) {
      // Polishing: accept only a full step that does not increase the residual.
      Eigen::VectorXd rt;
      const Eigen::VectorXd xt = x + dx;
      ++polished;
      if (try_residual(pb, ctx, xt, sigma, cfg, rt) && max_norm(rt) <= nr) {
        x = xt;
        r = rt;
        ++res.iterations;
        res.history.push_back(max_norm(r));
        continue;
      }
      break;
    }
    if (!line_search(pb, ctx, x, r, dx, sigma, cfg)) {
      res.reason = "line search failed";
      break;
    }
    ++res.iterations;
    res.history.push_back(max_norm(r));
  }
  res.residual = max_norm(r);
  res.converged = res.residual <= cfg.newton_tol;
  if (!res.converged && res.reason.empty()) res.reason = "iteration limit reached";
  return res;
}

Eigen::VectorXd newton_step(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x, double sigma,
                            const SchemeConfig& cfg) {
  Eigen::VectorXd r;
  if (!try_residual(pb, ctx, x, sigma, cfg, r)) throw StepFailure("newton_step: residual not computable");
  if (r.isZero(0.0)) return x;
  Eigen::VectorXd dx;
  if (!solve_linear(jacobian(pb, ctx, x, sigma, cfg.exec), -r, dx)) throw StepFailure("newton_step: singular Jacobian");
  Eigen::VectorXd xn = x;
  if (!line_search(pb, ctx, xn, r, dx, sigma, cfg)) throw StepFailure("newton_step: line search failed");
  return xn;
}

double jacobian_fd_mismatch(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x, double sigma,
                            const Eigen::VectorXd& v, double h) {
  const Eigen::VectorXd jv = jacobian(pb, ctx, x, sigma) * v;
  const Eigen::VectorXd fd = (residual(pb, ctx, x + h * v, sigma) - residual(pb, ctx, x - h * v, sigma)) / (2 * h);
  return (jv - fd).norm() / std::max(fd.norm(), 1e-300);
}

std::vector<double> eliminated_saturation(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x) {
  std::vector<double> xv(x.data(), x.data() + x.size());
  std::vector<double> out, sat;
  assemble_residual(pb, ctx, xv, 1.0, Exec::Serial, out, &sat);
  return sat;
}

NewtonResult picard_solve(const Problem& pb, const StepContext& ctx, Eigen::VectorXd& x, const SchemeConfig& cfg) {
  NewtonResult res;
  const ModelParams& m = pb.params;
  if (m.eps <= 0.0 && m.delta <= 0.0) {
    res.reason = "linearized problem needs eps > 0 or delta > 0";
    return res;
  }
  const int N = pb.N();
  const size_t nc = static_cast<size_t>(pb.num_cells());
  Eigen::VectorXd r;
  Eigen::VectorXd best = x;
  double best_res = INFINITY;
  for (int it = 0; it < cfg.picard_max; ++it) {
    if (!try_residual(pb, ctx, x, 1.0, cfg, r)) {
      res.reason = "residual not computable";
      break;
    }
    res.history.push_back(max_norm(r));
    if (res.history.back() < best_res) {
      best_res = res.history.back();
      best = x;
    }
    if (max_norm(r) <= cfg.newton_tol) {
      res.converged = true;
      break;
    }
    if (!(res.history.back() <= 1e8 * best_res)) {
      res.reason = "fixed-point iteration diverged";
      break;
    }
    // Frozen physical terms and coefficient temperature.
    std::vector<double> xv(x.data(), x.data() + x.size());
    std::vector<double> phys;
    try {
      assemble_physical(pb, ctx, xv, 1.0, cfg.exec, phys);
    } catch (const std::exception& e) {
      res.reason = e.what();
      break;
    }
    std::vector<double> Tstar(nc);
    for (size_t c = 0; c < nc; ++c) Tstar[c] = std::exp(x[static_cast<Eigen::Index>(c * (N + 1) + N)]);
    const Eigen::Map<const Eigen::VectorXd> physv(phys.data(), static_cast<Eigen::Index>(phys.size()));

    // Inner monotone problem reg(y; T*) = -phys(x*), solved by Newton.
    Eigen::VectorXd y = x;
    auto inner = [&](const Eigen::VectorXd& yy) {
      std::vector<double> yv(yy.data(), yy.data() + yy.size());
      std::vector<double> out(yv.size(), 0.0);
      add_regularizer(pb, yv, Tstar, cfg.exec, out);
      return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) + physv;
    };
    Eigen::VectorXd g = inner(y);
    for (int k = 0; k < 50 && max_norm(g) > 0.1 * cfg.newton_tol; ++k) {
      Eigen::VectorXd dy;
      if (!solve_linear(regularizer_jacobian(pb, y, Tstar, cfg.exec), -g, dy)) break;
      double t = 1.0;
      const double n0 = g.norm();
      for (; t >= cfg.min_step; t *= cfg.backtrack) {
        const Eigen::VectorXd gt = inner(y + t * dy);
        if (gt.norm() <= (1.0 - cfg.armijo * t) * n0) break;
      }
      if (t < cfg.min_step) break;
      y += t * dy;
      g = inner(y);
    }
    x = (1.0 - cfg.picard_relax) * x + cfg.picard_relax * y;
    ++res.iterations;
  }
  x = best;
  res.residual = best_res;
  if (!res.converged && res.reason.empty()) res.reason = "fixed-point iteration did not converge";
  return res;
}

EntropyState time_step(const Problem& pb, const EntropyState& prev, const SchemeConfig& cfg, StepReport* report) {
  const auto t0 = std::chrono::steady_clock::now();
  const StepContext ctx = StepContext::make(pb, prev);
  StepReport rep;
  Eigen::VectorXd x = pack_unknowns(prev);

  auto absorb = [&](const NewtonResult& nr) {
    rep.newton_iterations += nr.iterations;
    rep.residual_history.insert(rep.residual_history.end(), nr.history.begin(), nr.history.end());
    rep.final_residual = nr.residual;
  };

  NewtonResult nr = newton_solve(pb, ctx, x, 1.0, cfg);
  absorb(nr);
  std::string why = nr.reason;

  if (!nr.converged && pb.params.eps > 0.0) {
    rep.homotopy_path_used = true;
    Eigen::VectorXd xh = Eigen::VectorXd::Zero(x.size());
    bool ok = true;
    for (double sigma : cfg.homotopy_steps) {
      NewtonResult hr = newton_solve(pb, ctx, xh, sigma, cfg);
      absorb(hr);
      if (!hr.converged) {
        ok = false;
        why += "; homotopy stalled at sigma=" + std::to_string(sigma) + ": " + hr.reason;
        break;
      }
    }
    if (ok) {
      x = xh;
      nr.converged = true;
    }
  }

  if (!nr.converged) {
    rep.picard_used = true;
    Eigen::VectorXd xp = pack_unknowns(prev);
    NewtonResult pr = picard_solve(pb, ctx, xp, cfg);
    absorb(pr);
    if (!pr.converged) {
      NewtonResult fin = newton_solve(pb, ctx, xp, 1.0, cfg);
      absorb(fin);
      pr.converged = fin.converged;
      if (!fin.converged) why += "; fixed-point fallback: " + pr.reason;
    }
    if (!pr.converged) {
      if (report) *report = rep;
      throw StepFailure("time_step: no convergence (" + why + ")");
    }
    x = xp;
  }

  EntropyState next = prev;
  unpack_unknowns(x, next);
  next.S = eliminated_saturation(pb, ctx, x);
  rep.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (report) *report = rep;
  return next;
}

EntropyState initial_state(const Problem& pb, InitialFields init) {
  const double eps = pb.params.eps;
  for (double& s : init.S) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("initial saturation outside [0,1]");
    s = std::max(eps, std::min(s, 1.0 - eps));
    if (!(s > 0.0 && s < 1.0)) throw std::domain_error("initial saturation must lie in (0,1) when eps = 0");
  }
  for (double r : init.rho) {
    if (!(r > 0.0)) throw std::domain_error("initial densities must be positive");
  }
  for (double T : init.T) {
    if (!(T > 0.0)) throw std::domain_error("initial temperature must be positive");
  }
  return state_from_physical(pb, init.rho, init.T, init.S);
}

long step_count(double horizon, double tau) {
  if (!(horizon >= 0.0) || !(tau > 0.0)) throw std::invalid_argument("step_count: need horizon >= 0, tau > 0");
  return static_cast<long>(std::ceil(horizon / tau - 1e-9));
}

EntropyState run_simulation(const Problem& pb, const EntropyState& initial, const SchemeConfig& cfg,
                            double horizon, const std::function<void(const StepEvent&)>& observer) {
  const long L = step_count(horizon, pb.params.tau);
  EntropyState cur = initial;
  if (observer) observer(StepEvent{0, 0.0, &cur, nullptr, nullptr});
  for (long k = 1; k <= L; ++k) {
    StepReport rep;
    EntropyState next = time_step(pb, cur, cfg, &rep);
    if (observer) observer(StepEvent{k, k * pb.params.tau, &next, &cur, &rep});
    cur = std::move(next);
  }
  return cur;
}

}  // namespace nrflow
