#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "gaplab/mat2.hpp"
#include "gaplab/util.hpp"

namespace gaplab {

// in-place radix-2 FFT; size must be a power of two
void fft_inplace(std::vector<cplx>& a, bool inverse);
// any-size DFT: radix-2 path for powers of two, naive fallback otherwise;
// inverse includes the 1/M factor
std::vector<cplx> dft(const std::vector<cplx>& a, bool inverse);

// finite trigonometric series  f(x) = sum_{|k|<=nmax} c_k e^{2 pi i k x / period}
// period 1 lives on R/Z, period 2 on R/2Z (half-integer frequency lattice)
struct TrigSeries {
  int period = 1;
  int nmax = 0;
  std::vector<cplx> c;  // c[k + nmax], size 2*nmax+1
  double tail = 0.0;    // relative tail energy recorded by from_grid

  TrigSeries() : c(1, cplx(0.0)) {}
  TrigSeries(int per, int n) : period(per), nmax(n), c(2 * n + 1, cplx(0.0)) {}

  static TrigSeries constant(cplx v, int per = 1);
  // samples[j] = f(j*period/M); keeps |k| <= keep (default all below Nyquist).
  // tail is energy outside keep relative to the whole series, with the
  // denominator floored at amplitude scale_floor so that a numerically zero
  // sample set (for instance one entry of a matrix-valued field) does not
  // report its own rounding noise as aliasing.
  static TrigSeries from_grid(int per, const std::vector<cplx>& samples,
                              int keep = -1, double scale_floor = 0.0);

  cplx at(int k) const {
    return (k < -nmax || k > nmax) ? cplx(0.0) : c[k + nmax];
  }
  void set(int k, cplx v);

  cplx eval(cplx x) const;
  cplx eval(double x) const { return eval(cplx(x, 0.0)); }

  TrigSeries operator+(const TrigSeries& o) const;
  TrigSeries operator-(const TrigSeries& o) const;
  TrigSeries operator*(const TrigSeries& o) const;  // convolution
  TrigSeries operator*(cplx s) const;

  TrigSeries shifted(double dx) const;  // x -> x + dx
  TrigSeries conjugated() const;        // coefficients of conj(f(conj x))

  double reality_error() const;  // max_k |c_{-k} - conj(c_k)|
  void make_real();              // symmetrize onto the real subspace
  double norm1() const;          // sum |c_k|
  double norm2sq() const;
  // sup_{|Im x| <= eps} |f| upper bound: sum |c_k| e^{2 pi |k| eps / period}
  double strip_bound(double eps) const;
  // least-squares slope r of ln|c_k| ~ C - r|k| over the nonzero tail
  double decay_rate() const;
  double sup_grid(int m) const;
  void trim(double eps = 0.0);  // drop numerically zero outer coefficients
};

struct TrigMat {
  int period = 1;
  TrigSeries e[2][2];

  static TrigMat identity(int per = 1);
  static TrigMat rotation_path(double t, int k, int per);  // R_{2 pi (t + kx/2)}

  Mat2c eval(cplx x) const;
  Mat2d eval_real(double x) const;
  TrigMat shifted(double dx) const;
  TrigMat operator*(const TrigMat& o) const;
  TrigSeries det_series() const;
  int degree_hint() const;
  double reality_error() const;
};

// sample f on a grid of size grid_m and project entrywise; grid_m should be
// >= 4x the essential degree so the tail monitor stays quiet
TrigMat project_grid(int per, int grid_m, int keep,
                     const std::function<Mat2c(double)>& f);
TrigSeries project_grid_scalar(int per, int grid_m, int keep,
                               const std::function<cplx(double)>& f);

}  // namespace gaplab
