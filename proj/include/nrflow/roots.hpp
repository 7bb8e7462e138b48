#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace nrflow {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RootResult {
  double x = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Safeguarded Newton iteration on a bracket [lo, hi] with g(lo), g(hi) of
/// opposite sign. `g` returns the pair (value, derivative). Newton steps that
/// leave the bracket or fail to halve the residual are replaced by bisection.
/// The iteration also stops once the bracket is narrower than `xtol` or a few ulps.
template <class Fn>
RootResult safeguarded_newton(Fn&& g, double lo, double hi, double x0, double ftol,
                              int max_iter = 200, double xtol = 0.0) {
  auto [glo, dlo] = g(lo);
  auto [ghi, dhi] = g(hi);
  (void)dlo;
  (void)dhi;
  if (glo == 0.0) return {lo, 0.0, 0};
  if (ghi == 0.0) return {hi, 0.0, 0};
  if ((glo > 0.0) == (ghi > 0.0)) {
    throw ConvergenceError("safeguarded_newton: root is not bracketed");
  }
  const bool increasing = ghi > 0.0;

  double x = (x0 > lo && x0 < hi) ? x0 : 0.5 * (lo + hi);
  double last_abs = INFINITY;
  for (int it = 1; it <= max_iter; ++it) {
    auto [gx, dgx] = g(x);
    if (std::isnan(gx)) {
      const double mid = 0.5 * (lo + hi);
      if (mid == x) break;
      x = mid;
      continue;
    }
    if (std::abs(gx) <= ftol) return {x, gx, it};
    if ((gx > 0.0) == increasing) hi = x; else lo = x;
    if (hi - lo <= std::max(xtol, 4.0 * 2.220446049250313e-16 * std::max(std::abs(lo), std::abs(hi)))) {
      // Root not representable more accurately; keep a point with a finite value.
      if (std::isfinite(gx)) return {x, gx, it};
      const double other = x == hi ? lo : hi;
      return {other, g(other).first, it};
    }

    double next = x - gx / dgx;
    const bool inside = std::isfinite(next) && next > lo && next < hi;
    if (!inside || std::abs(gx) > 0.5 * last_abs) next = 0.5 * (lo + hi);
    last_abs = std::abs(gx);
    x = next;
  }
  auto [gx, dgx] = g(x);
  (void)dgx;
  if (std::abs(gx) <= ftol) return {x, gx, max_iter};
  throw ConvergenceError("safeguarded_newton: no convergence after " +
                         std::to_string(max_iter) + " iterations");
}

}  // namespace nrflow
