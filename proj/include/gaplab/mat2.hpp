#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <type_traits>

#include "gaplab/util.hpp"

namespace gaplab {

using cplx = std::complex<double>;

template <class T>
inline double abs2(const T& v) {
  if constexpr (std::is_same_v<T, cplx>)
    return std::norm(v);
  else
    return v * v;
}

template <class T>
inline T conj_val(const T& v) {
  if constexpr (std::is_same_v<T, cplx>)
    return std::conj(v);
  else
    return v;
}

// 2x2 matrix over double or complex<double>, row-major [[a,b],[c,d]]
template <class T>
struct Mat2 {
  T a{}, b{}, c{}, d{};

  static Mat2 id() { return {T(1), T(0), T(0), T(1)}; }

  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c,
            c * o.b + d * o.d};
  }
  Mat2 operator+(const Mat2& o) const {
    return {a + o.a, b + o.b, c + o.c, d + o.d};
  }
  Mat2 operator-(const Mat2& o) const {
    return {a - o.a, b - o.b, c - o.c, d - o.d};
  }
  Mat2 operator*(const T& s) const { return {a * s, b * s, c * s, d * s}; }

  T det() const { return a * d - b * c; }
  T tr() const { return a + d; }

  Mat2 inv() const {
    T dt = det();
    if (abs2(dt) < 1e-200)
      throw stage_error("cocycle", "singular 2x2 inverse");
    T r = T(1) / dt;
    return {d * r, -b * r, -c * r, a * r};
  }

  double fro() const {
    return std::sqrt(abs2(a) + abs2(b) + abs2(c) + abs2(d));
  }

  // spectral norm: sqrt of top eigenvalue of A^H A
  double norm2() const {
    double t = abs2(a) + abs2(b) + abs2(c) + abs2(d);
    double dd = abs2(det());
    double disc = t * t - 4.0 * dd;
    if (disc < 0) disc = 0;
    return std::sqrt(0.5 * (t + std::sqrt(disc)));
  }

  double max_abs() const {
    return std::sqrt(std::max(std::max(abs2(a), abs2(b)),
                              std::max(abs2(c), abs2(d))));
  }
};

using Mat2d = Mat2<double>;
using Mat2c = Mat2<cplx>;

// rotation by angle 2*pi*t
inline Mat2d rot2pi(double t) {
  double cs = std::cos(2.0 * M_PI * t), sn = std::sin(2.0 * M_PI * t);
  return {cs, -sn, sn, cs};
}

inline Mat2c to_complex(const Mat2d& m) {
  return {cplx(m.a), cplx(m.b), cplx(m.c), cplx(m.d)};
}

// Pade(6,6) with scaling-and-squaring; fixed order for cross-platform
// determinism of golden outputs
template <class T>
Mat2<T> expm(const Mat2<T>& m) {
  static const double pc[7] = {1.0,
                               1.0 / 2.0,
                               5.0 / 44.0,
                               1.0 / 66.0,
                               1.0 / 792.0,
                               1.0 / 15840.0,
                               1.0 / 665280.0};
  double nrm = m.fro();
  int s = 0;
  while (nrm > 0.5 && s < 60) {
    nrm *= 0.5;
    ++s;
  }
  double scl = std::ldexp(1.0, -s);
  Mat2<T> x = m * T(scl);
  Mat2<T> pw = Mat2<T>::id();
  Mat2<T> num = Mat2<T>::id() * T(pc[0]);
  Mat2<T> den = Mat2<T>::id() * T(pc[0]);
  double sgn = 1.0;
  for (int k = 1; k <= 6; ++k) {
    pw = pw * x;
    sgn = -sgn;
    num = num + pw * T(pc[k]);
    den = den + pw * T(pc[k] * sgn);
  }
  Mat2<T> r = den.inv() * num;
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

// running product with per-step scale extraction; represented matrix is
// 2^{e2} * unit with unit kept at Frobenius norm in [1/2, 1).  Powers of two
// make the extraction itself exact, so no rounding accumulates from scaling.
//
// Determinant health cannot be read off unit directly: once the product's
// condition number passes 1/eps, ad - bc of the normalized representative is
// pure cancellation noise (and the true value 2^{-2 e2} underflows anyway).
// Instead a transported orthonormal frame accumulates the log diagonal of the
// product's QR factorization, whose sum tracks sum ln|det factor| with only
// O(n eps) rounding at any length.
template <class T>
struct ScaledProduct {
  Mat2<T> unit = Mat2<T>::id();
  long long e2 = 0;
  long long steps = 0;
  T q1x = T(1.0), q1y = T(0.0);  // transported frame, first column
  T q2x = T(0.0), q2y = T(1.0);  // second column, kept orthonormal
  double ldiag = 0.0;            // flushed sum of ln r11 + ln r22
  double ldet_ref = 0.0;         // sum of ln|det factor|
  double p1 = 1.0, p2 = 1.0;     // running r11 / r22 products between flushes

  void mul_left(const Mat2<T>& f) {
    unit = f * unit;
    double s = unit.fro();
    if (!(s > 0.0) || !std::isfinite(s))
      throw stage_error("cocycle", "degenerate factor in scaled product");
    int ex = 0;
    std::frexp(s, &ex);
    if (ex != 0) {
      unit = unit * T(std::ldexp(1.0, -ex));
      e2 += ex;
    }
    T w1x = f.a * q1x + f.b * q1y, w1y = f.c * q1x + f.d * q1y;
    T w2x = f.a * q2x + f.b * q2y, w2y = f.c * q2x + f.d * q2y;
    double r11 = std::sqrt(abs2(w1x) + abs2(w1y));
    if (!(r11 > 0.0) || !std::isfinite(r11))
      throw stage_error("cocycle", "degenerate factor in scaled product");
    q1x = w1x / r11;
    q1y = w1y / r11;
    T r12 = conj_val(q1x) * w2x + conj_val(q1y) * w2y;
    w2x -= r12 * q1x;
    w2y -= r12 * q1y;
    double r22 = std::sqrt(abs2(w2x) + abs2(w2y));
    if (!(r22 > 0.0) || !std::isfinite(r22))
      throw stage_error("cocycle", "singular factor in scaled product");
    q2x = w2x / r22;
    q2y = w2y / r22;
    p1 *= r11;
    p2 *= r22;
    double adf = std::abs(f.det());
    if (adf != 1.0) ldet_ref += std::log(adf);
    ++steps;
    if ((steps & 63) == 0 || p1 > 1e90 || p1 < 1e-90 || p2 > 1e90 ||
        p2 < 1e-90) {
      ldiag += std::log(p1) + std::log(p2);
      p1 = 1.0;
      p2 = 1.0;
    }
    if (steps % 10000 == 0) check_det();
  }

  double log_mag() const { return M_LN2 * static_cast<double>(e2); }

  // ln|det(represented)| - sum ln|det factor|; ~n*eps for healthy products
  double det_drift() const {
    return ldiag + std::log(p1) + std::log(p2) - ldet_ref;
  }

  void check_det() const {
    double budget = 1e-9 * std::max(1.0, static_cast<double>(steps) / 1e4);
    if (std::abs(det_drift()) > budget)
      throw stage_error("cocycle", "scaled product det drift " +
                                       std::to_string(det_drift()) + " after " +
                                       std::to_string(steps) + " steps");
  }

  double log_norm2() const { return log_mag() + std::log(unit.norm2()); }
  double log_fro() const { return log_mag() + std::log(unit.fro()); }

  Mat2<T> represented() const {
    return unit * T(std::ldexp(1.0, static_cast<int>(e2)));
  }
};

}  // namespace gaplab
