#include "nrflow/residual.hpp"

#include <array>
#include <atomic>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "nrflow/constitutive.hpp"

namespace nrflow {

namespace {

constexpr int kPathNodes = 6;

struct PathRule {
  std::array<double, kPathNodes> theta{};
  std::array<double, kPathNodes> weight{};
};

// Gauss-Legendre rule mapped to [0,1].
const PathRule& path_rule() {
  static const PathRule rule = [] {
    using G = boost::math::quadrature::gauss<double, kPathNodes>;
    PathRule r;
    const auto& xs = G::abscissa();
    const auto& ws = G::weights();
    int k = 0;
    for (size_t j = 0; j < xs.size(); ++j) {
      r.theta[static_cast<size_t>(k)] = 0.5 * (1.0 - xs[j]);
      r.weight[static_cast<size_t>(k++)] = 0.5 * ws[j];
      r.theta[static_cast<size_t>(k)] = 0.5 * (1.0 + xs[j]);
      r.weight[static_cast<size_t>(k++)] = 0.5 * ws[j];
    }
    return r;
  }();
  return rule;
}

// Exceptions must not leave an OpenMP region; the first one is kept and rethrown.
class ErrorSlot {
 public:
  template <class Fn>
  void run(Fn&& fn) {
    if (failed_.load(std::memory_order_relaxed)) return;
    try {
      fn();
    } catch (const std::exception& e) {
      bool expected = false;
      if (failed_.compare_exchange_strong(expected, true)) message_ = e.what();
    }
  }
  void rethrow() const {
    if (failed_.load()) throw ConvergenceError(message_);
  }

 private:
  std::atomic<bool> failed_{false};
  std::string message_;
};

template <class S>
S mean2(const S& a, const S& b) {
  return 0.5 * (a + b);
}

}  // namespace

StepContext StepContext::make(const Problem& pb, const EntropyState& prev) {
  const auto fields = compute_fields(pb, prev);
  StepContext ctx;
  const int N = pb.N();
  const int nc = pb.num_cells();
  ctx.S_prev = prev.S;
  ctx.rhoS_prev.resize(static_cast<size_t>(nc * N));
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < N; ++i) {
      ctx.rhoS_prev[static_cast<size_t>(c * N + i)] = prev.S[static_cast<size_t>(c)] * fields.rho[static_cast<size_t>(c * N + i)];
    }
  }
  ctx.Ef_prev = fields.Ef;
  ctx.Es_prev = fields.Es;
  return ctx;
}

int stencil_radius(const Problem& pb) { return pb.params.delta > 0.0 ? 2 : 1; }

template <class S>
void assemble_physical(const Problem& pb, const StepContext& ctx, const std::vector<S>& x, double sigma,
                       Exec ex, std::vector<S>& out, PhysicalTerms<S>* terms) {
  const ModelParams& m = pb.params;
  const Closures& cl = pb.closures;
  const Grid& g = pb.grid;
  const int N = m.N;
  const int nu = N + 1;
  const long nc = g.num_cells();
  const double eps = m.eps;
  const double tau = m.tau;
  if (static_cast<long>(x.size()) != nc * nu) throw std::invalid_argument("assemble: unknown vector size");

  std::vector<S> rho(static_cast<size_t>(nc * N)), beta(static_cast<size_t>(nc)), T(static_cast<size_t>(nc));
  std::vector<S> p(static_cast<size_t>(nc)), sat(static_cast<size_t>(nc)), Ef(static_cast<size_t>(nc));
  std::vector<S> Es(static_cast<size_t>(nc)), lam(static_cast<size_t>(nc)), l00(static_cast<size_t>(nc));
  std::vector<S> li0(static_cast<size_t>(nc * N)), react(static_cast<size_t>(nc * N));

  ErrorSlot err;
#pragma omp parallel for if (detail::par(ex))
  for (long c = 0; c < nc; ++c) {
    err.run([&] {
      const size_t cu = static_cast<size_t>(c);
      SpeciesVec<S> z;
      for (int i = 0; i < N; ++i) z.push_back(x[static_cast<size_t>(c * nu + i)]);
      const S w = x[static_cast<size_t>(c * nu + N)];
      const auto r = densities_from_entropy_vars(m, z, w, eps);
      const S Tc = exp(w);
      S rt = 0.0;
      for (int i = 0; i < N; ++i) {
        rho[static_cast<size_t>(c * N + i)] = r[static_cast<size_t>(i)];
        rt += r[static_cast<size_t>(i)];
      }
      T[cu] = Tc;
      beta[cu] = exp(-w);
      p[cu] = pressure_total(m, rt, Tc, eps);
      const S rhoe = internal_energy_total(m, rt, Tc, eps);
      sat[cu] = saturation_update(m, cl, ctx.S_prev[cu], p[cu], tau, eps, sigma);
      Ef[cu] = fluid_energy(m, rhoe, sat[cu], eps);
      Es[cu] = skeleton_entropy_energy(m, Tc, eps).second;
      lam[cu] = mobility(m, cl, sat[cu], Tc);
      l00[cu] = onsager_heat(m, cl, Tc);
      const auto lc = onsager_cross(cl, r, Tc);
      const auto rc = reaction_terms(m, cl, rt, Tc, z, eps);
      for (int i = 0; i < N; ++i) {
        li0[static_cast<size_t>(c * N + i)] = lc[static_cast<size_t>(i)];
        react[static_cast<size_t>(c * N + i)] = rc[static_cast<size_t>(i)];
      }
    });
  }
  err.rethrow();

  const auto& faces = g.faces();
  const long nf = static_cast<long>(faces.size());
  std::vector<S> vel(static_cast<size_t>(nf)), mflux(static_cast<size_t>(nf * N)), hflux(static_cast<size_t>(nf));
  const PathRule& rule = path_rule();

#pragma omp parallel for if (detail::par(ex))
  for (long f = 0; f < nf; ++f) {
    err.run([&] {
      const auto& fc = faces[static_cast<size_t>(f)];
      const int L = fc.left;
      const int R = fc.right;
      const size_t Lu = static_cast<size_t>(L), Ru = static_cast<size_t>(R);
      SpeciesVec<S> dz, zL;
      for (int i = 0; i < N; ++i) {
        zL.push_back(x[static_cast<size_t>(L * nu + i)]);
        dz.push_back(x[static_cast<size_t>(R * nu + i)] - zL.back());
      }
      const S dbeta = beta[Ru] - beta[Lu];
      const S dp = p[Ru] - p[Lu];
      const S v = -m.K * mean2(lam[Lu], lam[Ru]) * dp / fc.dist;

      // Averages of rho_i and rho e along the straight segment in (z, 1/T).
      SpeciesVec<S> rbar(static_cast<size_t>(N), S(0.0));
      S ebar = 0.0;
      for (int k = 0; k < kPathNodes; ++k) {
        const double th = rule.theta[static_cast<size_t>(k)];
        const double wt = rule.weight[static_cast<size_t>(k)];
        SpeciesVec<S> zt;
        for (int i = 0; i < N; ++i) zt.push_back(zL[static_cast<size_t>(i)] + th * dz[static_cast<size_t>(i)]);
        const S bt = beta[Lu] + th * dbeta;
        const S wt_log = -log(bt);
        const auto rt = densities_from_entropy_vars(m, zt, wt_log, eps);
        S tot = 0.0;
        for (int i = 0; i < N; ++i) {
          rbar[static_cast<size_t>(i)] += wt * rt[static_cast<size_t>(i)];
          tot += rt[static_cast<size_t>(i)];
        }
        ebar += wt * internal_energy_total(m, tot, 1.0 / bt, eps);
      }
      // Project onto the exact discrete chain rule
      // sum rbar_i dz_i - ebar dbeta = (p/T)_R - (p/T)_L.
      S dd = dbeta * dbeta;
      S dot = -ebar * dbeta;
      for (int i = 0; i < N; ++i) {
        dd += dz[static_cast<size_t>(i)] * dz[static_cast<size_t>(i)];
        dot += rbar[static_cast<size_t>(i)] * dz[static_cast<size_t>(i)];
      }
      if (value(dd) > 1e-16) {
        const S target = p[Ru] * beta[Ru] - p[Lu] * beta[Lu];
        const S corr = (target - dot) / dd;
        for (int i = 0; i < N; ++i) rbar[static_cast<size_t>(i)] += corr * dz[static_cast<size_t>(i)];
        ebar -= corr * dbeta;
      }

      SpeciesVec<S> lf;
      for (int i = 0; i < N; ++i) lf.push_back(mean2(li0[static_cast<size_t>(L * N + i)], li0[static_cast<size_t>(R * N + i)]));
      const S l00f = mean2(l00[Lu], l00[Ru]);
      SpeciesVec<S> gz;
      for (int i = 0; i < N; ++i) gz.push_back(dz[static_cast<size_t>(i)] / fc.dist);
      const S gb = dbeta / fc.dist;
      const auto J = species_flux(cl, lf, gz, gb);
      const S q = heat_flux(lf, l00f, gz, gb);

      vel[static_cast<size_t>(f)] = v;
      for (int i = 0; i < N; ++i) {
        mflux[static_cast<size_t>(f * N + i)] = rbar[static_cast<size_t>(i)] * v + J[static_cast<size_t>(i)];
      }
      hflux[static_cast<size_t>(f)] = (ebar + mean2(p[Lu], p[Ru])) * v + q;
    });
  }
  err.rethrow();

  const Eigen::MatrixXd& b = pb.b;
  std::vector<S> zall(static_cast<size_t>(nc * N));
  for (long c = 0; c < nc; ++c) {
    for (int i = 0; i < N; ++i) zall[static_cast<size_t>(c * N + i)] = x[static_cast<size_t>(c * nu + i)];
  }
  const bool has_b = b.cwiseAbs().maxCoeff() > 0.0;
  const std::vector<S> bnd_species = has_b ? boundary_species_term(g, b, zall, pb.z0)
                                           : std::vector<S>(static_cast<size_t>(nc * N), S(0.0));
  const std::vector<S> bnd_heat = boundary_heat_term(g, m.alpha, T, m.T0);

  out.assign(static_cast<size_t>(nc * nu), S(0.0));
  const double inv_vol = 1.0 / g.cell_volume();
#pragma omp parallel for if (detail::par(ex))
  for (long c = 0; c < nc; ++c) {
    const size_t cu = static_cast<size_t>(c);
    SpeciesVec<S> dm(static_cast<size_t>(N), S(0.0));
    S de = 0.0;
    for (int f : g.cell_faces(static_cast<int>(c))) {
      const auto& fc = faces[static_cast<size_t>(f)];
      const double sgn = (fc.left == c ? 1.0 : -1.0) * fc.area * inv_vol;
      for (int i = 0; i < N; ++i) dm[static_cast<size_t>(i)] += sgn * mflux[static_cast<size_t>(f * N + i)];
      de += sgn * hflux[static_cast<size_t>(f)];
    }
    const double phi = pb.phi[cu];
    for (int i = 0; i < N; ++i) {
      const size_t k = static_cast<size_t>(c * N + i);
      out[static_cast<size_t>(c * nu + i)] = phi * (sat[cu] * rho[k] - ctx.rhoS_prev[k]) +
                                             tau * (dm[static_cast<size_t>(i)] - react[k] + bnd_species[k]);
    }
    out[static_cast<size_t>(c * nu + N)] = phi * (Ef[cu] - ctx.Ef_prev[cu]) +
                                           (1.0 - phi) * (Es[cu] - ctx.Es_prev[cu]) +
                                           tau * (de + bnd_heat[cu]);
  }

  if (terms) {
    terms->rho = std::move(rho);
    terms->T = std::move(T);
    terms->p = std::move(p);
    terms->sat = std::move(sat);
    terms->velocity = std::move(vel);
    terms->mass_flux = std::move(mflux);
    terms->heat_flux = std::move(hflux);
  }
}

template <class S>
void add_regularizer(const Problem& pb, const std::vector<S>& x, const std::vector<S>& Tcoef, Exec ex,
                     std::vector<S>& out) {
  const ModelParams& m = pb.params;
  const Grid& g = pb.grid;
  const int N = m.N;
  const int nu = N + 1;
  const size_t nc = static_cast<size_t>(g.num_cells());
  const double te = m.tau * m.eps;
  const double td = m.tau * m.delta;
  if (te == 0.0 && td == 0.0) return;

  std::vector<S> u(nc);
  for (int i = 0; i < N; ++i) {
    for (size_t c = 0; c < nc; ++c) u[c] = x[c * nu + static_cast<size_t>(i)];
    std::vector<S> acc(nc, S(0.0));
    if (te != 0.0) {
      const auto lap = laplace(g, u, ex);
      for (size_t c = 0; c < nc; ++c) acc[c] += te * (u[c] - lap[c]);
    }
    if (td != 0.0) {
      const auto bl = bilaplace<S>(g, u, nullptr, ex);
      for (size_t c = 0; c < nc; ++c) acc[c] += td * bl[c];
    }
    for (size_t c = 0; c < nc; ++c) out[c * nu + static_cast<size_t>(i)] += acc[c];
  }

  for (size_t c = 0; c < nc; ++c) u[c] = x[c * nu + static_cast<size_t>(N)];
  std::vector<S> onept(nc);
  for (size_t c = 0; c < nc; ++c) onept[c] = 1.0 + Tcoef[c];
  const auto onept_f = face_average(g, onept);
  std::vector<S> acc(nc, S(0.0));
  if (te != 0.0) {
    std::vector<S> tk(nc);
    for (size_t c = 0; c < nc; ++c) tk[c] = pow(Tcoef[c], -m.K3);
    const auto tk_f = face_average(g, tk);
    const auto lap = weighted_laplace(g, u, onept_f, ex);
    const auto plap = div(g, p_laplacian_flux(g, u, m.K3, &tk_f, ex), ex);
    for (size_t c = 0; c < nc; ++c) acc[c] += te * ((1.0 + tk[c]) * u[c] - lap[c] - plap[c]);
  }
  if (td != 0.0) {
    const auto bl = bilaplace(g, u, &onept, ex);
    const auto plap = div(g, p_laplacian_flux(g, u, 3.0, &onept_f, ex), ex);
    for (size_t c = 0; c < nc; ++c) acc[c] += td * (bl[c] - plap[c]);
  }
  for (size_t c = 0; c < nc; ++c) out[c * nu + static_cast<size_t>(N)] += acc[c];
}

template <class S>
void assemble_residual(const Problem& pb, const StepContext& ctx, const std::vector<S>& x, double sigma,
                       Exec ex, std::vector<S>& out, std::vector<S>* sat) {
  const int N = pb.N();
  const size_t nu = static_cast<size_t>(N + 1);
  const size_t nc = static_cast<size_t>(pb.num_cells());
  PhysicalTerms<S> terms;
  assemble_physical(pb, ctx, x, sigma, ex, out, &terms);
  if (sigma != 1.0) {
    for (auto& r : out) r = sigma * r;
  }
  std::vector<S> T(nc);
  for (size_t c = 0; c < nc; ++c) T[c] = exp(x[c * nu + static_cast<size_t>(N)]);
  add_regularizer(pb, x, T, ex, out);
  if (sat) *sat = std::move(terms.sat);
}

template void assemble_physical<double>(const Problem&, const StepContext&, const std::vector<double>&, double,
                                        Exec, std::vector<double>&, PhysicalTerms<double>*);
template void assemble_physical<Dual>(const Problem&, const StepContext&, const std::vector<Dual>&, double,
                                      Exec, std::vector<Dual>&, PhysicalTerms<Dual>*);
template void add_regularizer<double>(const Problem&, const std::vector<double>&, const std::vector<double>&,
                                      Exec, std::vector<double>&);
template void add_regularizer<Dual>(const Problem&, const std::vector<Dual>&, const std::vector<Dual>&, Exec,
                                    std::vector<Dual>&);
template void assemble_residual<double>(const Problem&, const StepContext&, const std::vector<double>&, double,
                                        Exec, std::vector<double>&, std::vector<double>*);
template void assemble_residual<Dual>(const Problem&, const StepContext&, const std::vector<Dual>&, double,
                                      Exec, std::vector<Dual>&, std::vector<Dual>*);

Eigen::VectorXd residual(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x, double sigma,
                         Exec ex) {
  std::vector<double> xv(x.data(), x.data() + x.size());
  std::vector<double> out;
  assemble_residual(pb, ctx, xv, sigma, ex, out);
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

namespace {

// Coloured forward-mode Jacobian: cells whose colours agree are at least
// 2R+1 apart along each axis, so no residual row sees two seeded cells.
template <class Eval>
Eigen::SparseMatrix<double> coloured_jacobian(const Problem& pb, const Eigen::VectorXd& x, int R, Eval&& eval) {
  const Grid& g = pb.grid;
  const int N = pb.N();
  const int nu = N + 1;
  const int nc = g.num_cells();
  const int P = 2 * R + 1;
  const int ncol = g.dim() == 2 ? P * P : P;
  auto colour = [&](int c) {
    const auto [i, j] = g.ij(c);
    return (i % P) + (g.dim() == 2 ? P * (j % P) : 0);
  };

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<Dual> xd(static_cast<size_t>(x.size()));
  std::vector<Dual> rd;
  for (int col = 0; col < ncol; ++col) {
    for (int v = 0; v < nu; ++v) {
      for (int c = 0; c < nc; ++c) {
        const bool seed = colour(c) == col;
        for (int k = 0; k < nu; ++k) {
          const size_t idx = static_cast<size_t>(c * nu + k);
          xd[idx] = Dual(x[static_cast<Eigen::Index>(idx)], (seed && k == v) ? 1.0 : 0.0);
        }
      }
      eval(xd, rd);
      for (int c = 0; c < nc; ++c) {
        const auto [ic, jc] = g.ij(c);
        int src = -1;
        for (int dj = (g.dim() == 2 ? -R : 0); dj <= (g.dim() == 2 ? R : 0) && src < 0; ++dj) {
          for (int di = -R; di <= R; ++di) {
            const int ii = ic + di, jj = jc + dj;
            if (ii < 0 || ii >= g.nx() || jj < 0 || jj >= g.ny()) continue;
            const int cc = g.index(ii, jj);
            if (colour(cc) == col) { src = cc; break; }
          }
        }
        if (src < 0) continue;
        for (int e = 0; e < nu; ++e) {
          const double d = rd[static_cast<size_t>(c * nu + e)].d;
          if (d != 0.0) trip.emplace_back(c * nu + e, src * nu + v, d);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> J(nc * nu, nc * nu);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

}  // namespace

Eigen::SparseMatrix<double> jacobian(const Problem& pb, const StepContext& ctx, const Eigen::VectorXd& x,
                                     double sigma, Exec ex) {
  return coloured_jacobian(pb, x, stencil_radius(pb), [&](const std::vector<Dual>& xd, std::vector<Dual>& rd) {
    assemble_residual(pb, ctx, xd, sigma, ex, rd);
  });
}

Eigen::SparseMatrix<double> regularizer_jacobian(const Problem& pb, const Eigen::VectorXd& x,
                                                 const std::vector<double>& Tcoef, Exec ex) {
  const std::vector<Dual> Td(Tcoef.begin(), Tcoef.end());
  return coloured_jacobian(pb, x, stencil_radius(pb), [&](const std::vector<Dual>& xd, std::vector<Dual>& rd) {
    rd.assign(xd.size(), Dual(0.0));
    add_regularizer(pb, xd, Td, ex, rd);
  });
}

namespace {

std::vector<double> full_rows(const Problem& pb, const EntropyState& k, const EntropyState& km1) {
  const StepContext ctx = StepContext::make(pb, km1);
  const Eigen::VectorXd x = pack_unknowns(k);
  std::vector<double> xv(x.data(), x.data() + x.size());
  std::vector<double> out;
  assemble_residual(pb, ctx, xv, 1.0, Exec::Serial, out);
  return out;
}

}  // namespace

std::vector<double> assemble_mass_residual(const Problem& pb, const EntropyState& state_k,
                                           const EntropyState& state_km1) {
  const auto rows = full_rows(pb, state_k, state_km1);
  const int N = pb.N();
  std::vector<double> out;
  out.reserve(static_cast<size_t>(pb.num_cells() * N));
  for (int c = 0; c < pb.num_cells(); ++c) {
    for (int i = 0; i < N; ++i) out.push_back(rows[static_cast<size_t>(c * (N + 1) + i)]);
  }
  return out;
}

std::vector<double> assemble_energy_residual(const Problem& pb, const EntropyState& state_k,
                                             const EntropyState& state_km1) {
  const auto rows = full_rows(pb, state_k, state_km1);
  const int N = pb.N();
  std::vector<double> out;
  out.reserve(static_cast<size_t>(pb.num_cells()));
  for (int c = 0; c < pb.num_cells(); ++c) out.push_back(rows[static_cast<size_t>(c * (N + 1) + N)]);
  return out;
}

}  // namespace nrflow
