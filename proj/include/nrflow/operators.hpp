#pragma once

// Two-point finite-volume operators on a structured grid.
//
// Face quantities live on grid.faces() (interior faces only); the boundary is
// closed with zero normal flux unless a boundary law adds its own term. All
// cell loops gather over the faces of the cell in a fixed order, so the
// parallel and serial paths produce identical bits.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nrflow/dual.hpp"
#include "nrflow/grid.hpp"

namespace nrflow {

enum class Exec { Serial, Parallel };

namespace detail {
inline bool par(Exec e) { return e == Exec::Parallel; }
}  // namespace detail

/// Face-normal difference quotient (u_right - u_left) / dist.
template <class S>
std::vector<S> grad(const Grid& g, const std::vector<S>& u, Exec ex = Exec::Serial) {
  if (static_cast<int>(u.size()) != g.num_cells()) throw std::invalid_argument("grad: size mismatch");
  const auto& faces = g.faces();
  std::vector<S> out(faces.size());
  const long nf = static_cast<long>(faces.size());
#pragma omp parallel for if (detail::par(ex))
  for (long f = 0; f < nf; ++f) {
    const auto& fc = faces[static_cast<size_t>(f)];
    out[static_cast<size_t>(f)] = (u[static_cast<size_t>(fc.right)] - u[static_cast<size_t>(fc.left)]) / fc.dist;
  }
  return out;
}

/// Cell divergence of a face flux: (1/vol) sum over faces of flux . n area.
template <class S>
std::vector<S> div(const Grid& g, const std::vector<S>& flux, Exec ex = Exec::Serial) {
  const auto& faces = g.faces();
  if (flux.size() != faces.size()) throw std::invalid_argument("div: size mismatch");
  const long nc = g.num_cells();
  const double inv_vol = 1.0 / g.cell_volume();
  std::vector<S> out(static_cast<size_t>(nc));
#pragma omp parallel for if (detail::par(ex))
  for (long c = 0; c < nc; ++c) {
    S acc = 0.0;
    for (int f : g.cell_faces(static_cast<int>(c))) {
      const auto& fc = faces[static_cast<size_t>(f)];
      const S contrib = flux[static_cast<size_t>(f)] * fc.area;
      if (fc.left == c) acc += contrib; else acc -= contrib;
    }
    out[static_cast<size_t>(c)] = acc * inv_vol;
  }
  return out;
}

/// div(grad u) with zero-flux boundary closure.
template <class S>
std::vector<S> laplace(const Grid& g, const std::vector<S>& u, Exec ex = Exec::Serial) {
  return div(g, grad(g, u, ex), ex);
}

/// div(coef_f grad u) with a face coefficient.
template <class S>
std::vector<S> weighted_laplace(const Grid& g, const std::vector<S>& u, const std::vector<S>& coef,
                                Exec ex = Exec::Serial) {
  std::vector<S> gr = grad(g, u, ex);
  for (size_t f = 0; f < gr.size(); ++f) gr[f] = gr[f] * coef[f];
  return div(g, gr, ex);
}

/// L(W L u): realizes the form <L u, W L phi>, symmetric and PSD for W >= 0.
template <class S>
std::vector<S> bilaplace(const Grid& g, const std::vector<S>& u, const std::vector<S>* weight = nullptr,
                         Exec ex = Exec::Serial) {
  std::vector<S> lu = laplace(g, u, ex);
  if (weight) {
    for (size_t c = 0; c < lu.size(); ++c) lu[c] = lu[c] * (*weight)[c];
  }
  return laplace(g, lu, ex);
}

/// coef_f |grad w|^(m-1) grad w on every interior face; a null coef means 1.
template <class S>
std::vector<S> p_laplacian_flux(const Grid& g, const std::vector<S>& w, double m,
                                const std::vector<S>* coef = nullptr, Exec ex = Exec::Serial) {
  if (m < 1.0) throw std::invalid_argument("p_laplacian_flux: exponent must be >= 1");
  std::vector<S> gr = grad(g, w, ex);
  for (size_t f = 0; f < gr.size(); ++f) {
    gr[f] = signed_power(gr[f], m);
    if (coef) gr[f] = gr[f] * (*coef)[f];
  }
  return gr;
}

/// Arithmetic face average of a cell field.
template <class S>
std::vector<S> face_average(const Grid& g, const std::vector<S>& u) {
  const auto& faces = g.faces();
  std::vector<S> out(faces.size());
  for (size_t f = 0; f < faces.size(); ++f) {
    out[f] = 0.5 * (u[static_cast<size_t>(faces[f].left)] + u[static_cast<size_t>(faces[f].right)]);
  }
  return out;
}

/// Sum of vol * u over all cells.
template <class S>
S integrate(const Grid& g, const std::vector<S>& u) {
  S acc = 0.0;
  for (const auto& x : u) acc += x;
  return acc * g.cell_volume();
}

/// Species boundary flux per unit volume,
/// (1/vol) sum_{boundary faces} area sum_l b_il (z_l - z0_l).
/// z is cell-major with N entries per cell.
template <class S>
std::vector<S> boundary_species_term(const Grid& g, const Eigen::MatrixXd& b, const std::vector<S>& z,
                                     const std::vector<double>& z0) {
  const int N = static_cast<int>(b.rows());
  std::vector<S> out(static_cast<size_t>(g.num_cells() * N), S(0.0));
  const double inv_vol = 1.0 / g.cell_volume();
  for (const auto& bf : g.boundary_faces()) {
    for (int i = 0; i < N; ++i) {
      S acc = 0.0;
      for (int l = 0; l < N; ++l) {
        if (b(i, l) != 0.0) acc += b(i, l) * (z[static_cast<size_t>(bf.cell * N + l)] - z0[static_cast<size_t>(l)]);
      }
      out[static_cast<size_t>(bf.cell * N + i)] += acc * (bf.area * inv_vol);
    }
  }
  return out;
}

/// Robin heat flux per unit volume, (1/vol) sum_{boundary faces} area alpha (T - T0).
template <class S>
std::vector<S> boundary_heat_term(const Grid& g, double alpha, const std::vector<S>& T, double T0) {
  std::vector<S> out(static_cast<size_t>(g.num_cells()), S(0.0));
  if (alpha == 0.0) return out;
  const double inv_vol = 1.0 / g.cell_volume();
  for (const auto& bf : g.boundary_faces()) {
    out[static_cast<size_t>(bf.cell)] += alpha * (T[static_cast<size_t>(bf.cell)] - T0) * (bf.area * inv_vol);
  }
  return out;
}

}  // namespace nrflow
