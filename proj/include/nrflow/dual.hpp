#pragma once

// Forward-mode dual number with a single tangent direction.
//
// The residual assembly is templated on the scalar type; instantiating it with
// Dual and seeding one column colour at a time yields exact Jacobian columns.

#include <cmath>
#include <ostream>

namespace nrflow {

struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // tangent

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants
  constexpr Dual(double value, double tangent) : v(value), d(tangent) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    d = (d - v * inv * o.d) * inv;
    v *= inv;
    return *this;
  }
};

inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator+(Dual a, double b) { a.v += b; return a; }
inline Dual operator+(double a, Dual b) { b.v += a; return b; }
inline Dual operator-(Dual a, double b) { a.v -= b; return a; }
inline Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
inline Dual operator*(Dual a, double b) { a.v *= b; a.d *= b; return a; }
inline Dual operator*(double a, Dual b) { b.v *= a; b.d *= a; return b; }
inline Dual operator/(Dual a, double b) { a.v /= b; a.d /= b; return a; }
inline Dual operator/(double a, const Dual& b) {
  const double inv = 1.0 / b.v;
  return {a * inv, -a * inv * inv * b.d};
}

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return {s, s > 0.0 ? 0.5 * a.d / s : 0.0};
}
inline Dual pow(const Dual& a, double e) {
  if (e == 0.0) return {1.0, 0.0};
  if (a.v == 0.0) return {e > 0.0 ? 0.0 : INFINITY, e == 1.0 ? a.d : 0.0};
  const double pm1 = std::pow(a.v, e - 1.0);
  return {pm1 * a.v, e * pm1 * a.d};
}
inline Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }

inline std::ostream& operator<<(std::ostream& os, const Dual& a) {
  return os << a.v << "+" << a.d << "e";
}

// Double overloads in this namespace so templated code can call exp/log/...
// unqualified for both scalar types.
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double pow(double x, double e) { return std::pow(x, e); }
inline double abs(double x) { return std::abs(x); }

inline double value(double x) { return x; }
inline double value(const Dual& x) { return x.v; }

/// |x|^(m-1) x, with the derivative m |x|^(m-1) taken directly so m = 1 and
/// x = 0 stay well defined.
inline double signed_power(double x, double m) {
  if (m == 1.0) return x;
  return std::pow(std::abs(x), m - 1.0) * x;
}
inline Dual signed_power(const Dual& x, double m) {
  if (m == 1.0) return x;
  const double a = std::pow(std::abs(x.v), m - 1.0);
  return {a * x.v, m * a * x.d};
}

}  // namespace nrflow
