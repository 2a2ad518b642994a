#pragma once

#include <string>
#include <vector>

#include "gaplab/frequency.hpp"
#include "gaplab/trig.hpp"

namespace gaplab {

// ---------------------------------------------------------------------------
// Symmetric tridiagonal engine (constant off-diagonal). Used for the dual
// operator  diag 2 cos 2pi(theta + k alpha), off-diagonal lambda,  and for
// the direct operator  diag 2 lam cos 2pi(theta + k alpha), off-diagonal 1.
// ---------------------------------------------------------------------------

// number of eigenvalues < E (Sturm pivot count, zero pivots nudged)
int tridiag_count_below(const std::vector<double>& diag, double off, double E);

// all eigenvalues in [lo, hi], each bisected to tol (default 1e-13 * scale)
std::vector<double> tridiag_eigenvalues(const std::vector<double>& diag,
                                        double off, double lo, double hi,
                                        double tol = 0.0);

struct TriPair {
  double value = 0.0;
  std::vector<double> vec;  // unit 2-norm
  double residual = 0.0;    // ||T v - value v||_2
};
// inverse iteration at a bisected shift; `avoid` vectors (near-degenerate
// siblings already accepted) are projected out of every iterate
TriPair tridiag_eigenpair(const std::vector<double>& diag, double off,
                          double shift,
                          const std::vector<const std::vector<double>*>& avoid = {});

// ---------------------------------------------------------------------------
// Dual eigenproblem
// ---------------------------------------------------------------------------

// Eigenpair of the (2M+1)-truncated dual operator on sites k in [-M, M].
// coeffs[i] is u_k at k = i - M, rescaled so u_center = 1; `theta` is the
// phase translated to the peak (theta_in + center * alpha), which is the
// phase whose resonances structure the decay about the peak.
struct DualEigenpair {
  double E = 0.0;
  double lambda = 0.0;
  PhasePoint theta;            // translated (peak-centered) phase
  int M = 0;                   // window [-M, M]
  long long center = 0;        // lattice position of the peak
  std::vector<double> coeffs;  // size 2M+1, coeffs[center + M] = 1
  double residual = 0.0;       // ||H u - E u|| / ||u||
  double decay_rate = 0.0;     // fitted exponential rate about the peak
  bool boundary_contaminated = false;
  ResonanceReport resonance_ctx;  // of the translated phase (irrational alpha)
};

// Eigenpairs of diag 2cos2pi(theta + k alpha), off-diagonal lambda, with
// eigenvalue in [e_lo, e_hi]. eps0 = 0 picks max(2 beta_hat, 2) for the
// resonance scan; res_cap = 0 scans |k| <= M. Empty window -> empty list.
std::vector<DualEigenpair> dual_eigenpairs(double lambda,
                                           const AlphaSpec& alpha,
                                           const PhasePoint& theta, int M,
                                           double e_lo, double e_hi,
                                           double eps0 = 0.0,
                                           long long res_cap = 0);

// the single pair with E nearest e_target (helper for theta(E) selection)
DualEigenpair dual_eigenpair_nearest(double lambda, const AlphaSpec& alpha,
                                     const PhasePoint& theta, int M,
                                     double e_target, double half_width = 0.25,
                                     double eps0 = 0.0);

// ---------------------------------------------------------------------------
// Strong localization estimate
// ---------------------------------------------------------------------------

struct SLEWindow {
  long long n_lo = 0, n_hi = 0;  // |n_j|, |n_{j+1}| bounding the window
  long long k_lo = 0, k_hi = 0;  // integer offsets actually checked
  double c_min = 0.0;            // minimal feasible C on this window
  double fitted_rate = 0.0;      // least-squares decay rate on the window
  bool skipped = false;
  std::string note;
};

struct SLEReport {
  double c0 = 3.0;
  double eps1 = 0.0;
  double c_min = 0.0;  // minimal C valid on every checked window
  std::vector<SLEWindow> windows;
};

// checks |u_k| <= C e^{-eps1 |k - center|} on the windows
// (C0 |n_j|, |n_{j+1}| / C0) cut from the pair's resonance offsets;
// eps1 = 0 picks L/64 with L = ln(1/|lambda|)
SLEReport verify_strong_localization(const DualEigenpair& pair, double c0 = 3.0,
                                     double eps1 = 0.0);

// ---------------------------------------------------------------------------
// Determinants, Green functions, regularity
// ---------------------------------------------------------------------------

// value = mant * 2^e2 with mant in [1/2, 1) (or 0); survives any length
struct ScaledDet {
  double mant = 0.0;
  long long e2 = 0;
  double log_abs() const;  // -inf when mant == 0
  int sgn() const { return (mant > 0.0) - (mant < 0.0); }
  double value() const;  // saturates to +-inf / 0 outside double range
};

// P_k = det of the k-step block of (E - H) with potential
// 2 lam cos 2pi(theta + (site0 + j) alpha), j = 0..k-1; P_0 = 1.
// Equals the (1,1) entry of the k-step transfer matrix at phase
// theta + site0 alpha.
ScaledDet pk_determinant(long long k, double theta, double E, double lam,
                         const AlphaSpec& alpha, long long site0 = 0);

// signed Green entry of (H_I - E)^{-1} in log form
struct GreenEntry {
  double log_abs = 0.0;
  int sign = 0;
  double value() const;
};

struct GreenRow {
  long long x1 = 0, x2 = 0, y = 0;
  GreenEntry to_left;   // G_I(y, x1) = G_I(x1, y)
  GreenEntry to_right;  // G_I(y, x2)
};

// Cramer quotients -P_{x2-y}(theta+(y+1)alpha)/P_{|I|}(theta+x1 alpha) and
// -P_{y-x1}(theta+x1 alpha)/P_{|I|}(theta+x1 alpha); cross-checked against a
// pivoted tridiagonal solve whenever the entries are representable.
// Throws when the interval determinant is numerically singular.
GreenRow green_entries(long long x1, long long x2, long long y, double E,
                       double theta, double lam, const AlphaSpec& alpha);

struct RegularVerdict {
  bool regular = false;
  long long x1 = 0, x2 = 0;      // witnessing interval when regular
  double log_g1 = 0.0, log_g2 = 0.0;  // achieved log |G| at the reported interval
  double margin = 0.0;           // min over the report of (-m d - log|G|)
};

// y is (m,k)-regular iff some interval [x1, x1+k-1] containing y with both
// edge distances >= delta*k has |G(y, x_i)| < e^{-m |y - x_i|} at both edges.
// Requires 1/10 < delta < 1/2; throws when no interval fits the geometry.
// Intervals with singular determinant simply fail to witness regularity.
RegularVerdict classify_regular(long long y, double m, long long k,
                                double delta, double E, double theta,
                                double lam, const AlphaSpec& alpha);

// ---------------------------------------------------------------------------
// gamma-uniformity, sine sums, grid norms
// ---------------------------------------------------------------------------

struct GammaUniformReport {
  bool uniform = false;
  double log_max = 0.0;   // max over i, x of ln prod_{j != i} |x-z_j|/|z_i-z_j|
  double log_bound = 0.0;  // k * gamma
  double arg_x = 0.0;
  int arg_i = 0;
};

// z_i = cos 2pi theta_i; max of the Lagrange products over x in [-1,1] via a
// Chebyshev grid of size 8k plus golden-section refinement. Throws when two
// z_i are closer than 1e-12.
GammaUniformReport gamma_uniform_test(const std::vector<double>& thetas,
                                      double gamma);

struct SinSumReport {
  double value = 0.0;  // sum_{l != l0} ln|sin pi(x + l alpha)| + (q_n-1) ln 2
  long long q = 0;
  long long l0 = 0;        // minimizing index, excluded from the sum
  double c_fitted = 0.0;   // |value| / q_n
};

SinSumReport sin_sum_check(double x, int n, const IrrationalFrequency& alpha);

struct GridBoundReport {
  double sup_dense = 0.0;  // ||p||_0 from a dense grid + local refinement
  double sup_grid = 0.0;   // sup over the orbit grid {x0 + j alpha}, 0<=j<=k
  double ratio = 0.0;      // sup_dense / sup_grid
  long long k = 0;         // essential-degree budget r q_n - 1
};

// p must have period 1 and essential degree 2*nmax_eff <= r q_n - 1, with
// 1 <= r <= floor(q_{n+1}/q_n); throws on the degree or r-range violation.
GridBoundReport polynomial_grid_bound_check(const TrigSeries& p, double x0,
                                            int r, int n,
                                            const IrrationalFrequency& alpha);

}  // namespace gaplab
