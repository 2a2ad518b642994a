#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gaplab/cocycle.hpp"
#include "gaplab/localization.hpp"

namespace gaplab {

// ---------------------------------------------------------------------------
// Bloch vectors from truncated dual eigenvectors
// ---------------------------------------------------------------------------

// U^I(x) = (e^{2 pi i theta} u^I(x), u^I(x - alpha)) with
// u^I = sum_{k in I} u_k e^{2 pi i k x} built from a dual eigenpair in
// peak-centered coordinates. Cutting the sum at I leaves a defect with
// exactly four modes (k_lo-1, k_lo, k_hi, k_hi+1) in the duality identity
//   A(x) U^I(x) = e^{2 pi i theta} ( U^I(x+alpha) + (g(x), 0) ),
// where A = S_{lambda,E} at the pair's energy.
struct BlochVector {
  double e = 0.0, lambda = 0.0, theta = 0.0;
  long long k_lo = 0, k_hi = 0;    // window I in peak-centered coordinates
  TrigSeries u;                    // u^I, period 1
  TrigSeries u1, u2;               // components of U^I
  TrigSeries g;                    // the defect
  double identity_residual = 0.0;  // grid sup of the identity mismatch
};

// The window must stay inside the pair's coefficient support. Throws when
// the verified identity residual exceeds 1e-10 * scale (wiring bug).
BlochVector bloch_vector(const DualEigenpair& pair, const AlphaSpec& alpha,
                         long long k_lo, long long k_hi);

// ---------------------------------------------------------------------------
// Realification and SL(2,R) completion
// ---------------------------------------------------------------------------

struct RealifyResult {
  TrigMat st;   // columns S = Re U~, T = Im U~ on R/2Z (unnormalized)
  TrigMat w;    // (S | sign*T) / sqrt(|det_b| / 2), det ~ 1 on the grid
  int sign = 1;              // orientation: det(S | sign*T) > 0
  double det_b = 0.0;        // |det(U~ | conj U~)| grid mean
  double det_b_drift = 0.0;  // sup |det - mean| over the grid
  double theta_tilde = 0.0;  // theta - n_j alpha / 2 reduced mod 1
  double p_inv = 0.0;        // ||2 theta - n_j alpha||, resonance gauge
};

// U~ = e^{pi i n_j x} (u1, u2) on R/2Z. theta enters the gauge diagnostics
// only. Throws "resonant collapse" when |det B~| < 1e-13 (U~ and conj U~
// colinear, which is the exact-resonance degeneration).
RealifyResult realify(const TrigSeries& u1, const TrigSeries& u2,
                      long long n_j, const PhasePoint& theta,
                      const AlphaSpec& alpha);

// Completes a nowhere-vanishing real column W on R/2Z to B in SL(2,R) with
// first column W: the pointwise candidate second column (-w2, w1)/||W||^2 is
// DFT-projected, one Newton correction pushes det back to 1, and
// symmetrization keeps every entry real. Throws when inf ||W|| over the grid
// is below min_norm_floor or the det residual stays above 1e-8.
TrigMat complete_to_sl2(const TrigSeries& w1, const TrigSeries& w2,
                        double min_norm_floor);

struct RotationResidual {
  double residual = 0.0;  // sup over the grid at the better sign
  int sign = 0;           // +1 for R_{+theta}, -1 for R_{-theta}
};

// sup_x || W(x+alpha)^{-1} A(x) W(x) - R_{sign*theta} ||, minimized over the
// sign; the almost-reducibility residual of the realified conjugator.
RotationResidual rotation_residual(const TrigMat& w, const CocycleSpec& spec,
                                   double theta_tilde);

// ---------------------------------------------------------------------------
// Homological equations
// ---------------------------------------------------------------------------

struct DivisorEntry {
  int k = 0;
  double mag = 0.0;  // |1 - e^{2 pi i k alpha / period}|
};

struct ScalarHomological {
  TrigSeries phi;  // hat phi_0 = 0
  double residual = 0.0;  // grid sup of the re-substituted equation / ||kappa||
  std::vector<DivisorEntry> divisors;   // per-mode divisor magnitudes
  double min_divisor = 0.0;
  int min_divisor_k = 0;
  double strip_loss = 0.0;  // max_k ln(1/|d_k|) / (2 pi |k| / period)
};

// Solves sign*(phi(x+alpha) - phi(x)) = kappa - [kappa] on kappa's frequency
// lattice: hat phi_k = -sign * hat kappa_k / (1 - e^{2 pi i k alpha/period}).
// A divisor below 1e-14 throws, listing the offending modes. Divisors on the
// half-integer lattice (period 2) use the exact parity of floor(k alpha), so
// deep resonances are not misread through rounded phase accumulation.
ScalarHomological scalar_homological_solve(const TrigSeries& kappa,
                                           const AlphaSpec& alpha, int sign);

// Constant upper-triangular normal form [[sign, a], [0, sign]].
struct ParabolicForm {
  int sign = 1;
  double a = 0.0;
};

struct MatrixHomological {
  TrigMat y;  // hat Y(0) = 0, tr Y = 0
  double residual = 0.0;     // grid sup of the equation mismatch / ||T||
  double min_divisor = 0.0;  // smallest base divisor |1 - e^{2 pi i k alpha}|
  int min_divisor_k = 0;
};

// Solves Y(x+alpha) Z - Z Y(x) = Z (T - [T]) on R/Z for traceless T; the
// triangular structure of Z gives divisor powers 1, 2, 2, 3 for the entries
// 21, 11, 22, 12, so the effective denominator of a mode is the base divisor
// cubed at worst; when that drops below 1e-14 this throws.
MatrixHomological matrix_homological_solve(const ParabolicForm& z,
                                           const TrigMat& t,
                                           const AlphaSpec& alpha,
                                           int n_trunc = 0);

// ---------------------------------------------------------------------------
// One averaging step and the gap certificate
// ---------------------------------------------------------------------------

struct KamStepReport {
  ParabolicForm z;
  double epsilon = 0.0;
  int n_trunc = 0;
  TrigMat p;       // P = B(x+alpha)^{-1} e11 B(x)
  Mat2d p_avg{};   // [P]
  TrigMat y;       // homological solution
  double g52_residual = 0.0;     // sup |sign*B21(x+alpha) - B11(x)|
  double residual_before = 0.0;  // eps * sup ||P - [P]||
  double residual_after = 0.0;   // sup ||e^{-eps Y(x+a)}(Z+eps P)e^{eps Y} - Z - eps[P]||
  Mat2d d{};                     // Z0 + eps Z1
  double discriminant = 0.0;     // det d
  std::string verdict;           // "hyperbolic" | "elliptic" | "marginal"
};

// One averaging step for A_{E0+eps} = A0 + eps*e11 conjugated by B, where B
// reduces A0 to the constant parabolic Z: requires the grid residual
// ||B(x+alpha)^{-1} A0 B - Z|| <= 1e-6, forms P, solves for Y, and measures
// the second-order remainder after conjugating by exp(eps Y).
KamStepReport kam_step(const TrigMat& a0, const TrigMat& b,
                       const ParabolicForm& z, const AlphaSpec& alpha,
                       double epsilon, int n_trunc = 0);

struct GapVerdict {
  double eps = 0.0;
  double discriminant = 0.0;  // det(Z0 + eps Z1)
  double exponent = 0.0;      // sqrt(-d) when hyperbolic
  bool hyperbolic = false;
  bool marginal = false;         // |d| < 1e-14
  bool sign_consistent = false;  // sign d == sign(-a * eps * p21)
};

// First-order dichotomy certificate at a parabolic edge: the traceless
// D = Z0 + eps Z1 generates the normal form of Z + eps [P], and det D
// reproduces its trace dichotomy through O(eps^2): det D < 0 certifies a
// uniformly hyperbolic (off-spectrum) side with exponent sqrt(-det D) up to
// O(eps^{3/2}). Requires a != 0 (a parabolic edge cannot be the identity)
// and an admissible average: tr [P] = sign * a * [P]_21, which any
// unimodular family A(eps) = B(Z + eps P)B^{-1} + O(eps^2) satisfies.
std::vector<GapVerdict> gap_certificate(const ParabolicForm& z,
                                        const Mat2d& p_avg,
                                        const std::vector<double>& eps_range);

// Jordan data of a near-parabolic SL(2,R) matrix: U^{-1} A U = [[s,a],[0,s]].
struct JordanPair {
  Mat2d u{};
  ParabolicForm form;
  double defect = 0.0;  // ||U^{-1} A U - normal form|| consistency residual
};
JordanPair parabolic_normal_form(const Mat2d& a);

// ---------------------------------------------------------------------------
// Discrete Wronskians
// ---------------------------------------------------------------------------

struct WronskianReport {
  std::vector<double> w;  // W_n over the valid range (n = step, step+1, ...)
  double max_jump = 0.0;  // max |W_n - W_{n-1}|
  double scale = 0.0;     // sup |f| * sup |g|
  bool dependent = false; // max |W| below the dependence floor
};

// step 1: W_n = f(n)g(n+1) - g(n)f(n+1);
// step 2: W_n = f(n)g(n+2) + f(n-1)g(n+1) - g(n)f(n+2) - g(n-1)f(n+1).
// Constancy of W_n is equivalent to f and g solving one three-term (step-2:
// next-nearest) recursion; a jump above 1e-10 * scale throws.
WronskianReport wronskian(const std::vector<double>& f,
                          const std::vector<double>& g, int step);

// ---------------------------------------------------------------------------
// Reduction pipeline
// ---------------------------------------------------------------------------

// A phase theta in [0,1) at which the truncated dual operator on [-M, M] has
// an eigenvalue at E (bisected to ~1e-12 from a counting-function flip over
// a theta scan). Throws when the scan sees no eigenvalue curve crossing E.
double dual_eigenphase(double lambda, const AlphaSpec& alpha, double E, int M);

struct ReduceConfig {
  int window = 200;             // dual truncation half-size M
  double e_half_width = 0.4;    // energy half-width for the dual pair search
  double eps0 = 0.0;            // resonance threshold (0: auto)
  double resonant_snap = 1e-7;  // ||2 theta - k alpha|| below: exact lattice
  long long rot_iters = 400000; // Birkhoff length for the rho cross-check
};

struct ReduceResult {
  DualEigenpair pair;          // the dual eigenphase surrogate
  double surrogate_gap = 0.0;  // |pair.E - requested E|
  bool resonant = false;       // 2 theta in alpha Z + Z (snapped)
  long long resonance_k = 0;   // the lattice index (twist n_j)
  long long k_lo = 0, k_hi = 0;  // Bloch window used
  BlochVector bloch;
  TrigMat b;          // the conjugator (R/2Z representation)
  int degree_b = 0;
  bool parabolic = false;
  ParabolicForm form;         // resonant branch normal form
  double theta_tilde = 0.0;   // rotation angle, non-resonant branch
  int rot_sign = 0;
  double conj_residual = 0.0; // sup ||B(x+alpha)^{-1} A B - normal form||
  double rho = 0.0;           // measured rotation number of A
  double rho_defect = 0.0;    // dist of 2 rho -+ (2 theta~ + deg alpha) to Z
  bool r2z_only = false;      // B(x+1)^{-1} B(x) failed the +-I constancy check
  std::vector<std::pair<std::string, double>> ledger;
};

// Orchestrates: dual eigenphase at E -> Bloch vector on a noise-floor-cut
// window -> realify + completion -> rotation form R_{+-theta} (non-resonant)
// or triangular reduction + scalar homological solve -> parabolic form
// (resonant); measures every stage residual and the rotation-number
// bookkeeping 2 rho = +-2 theta~ + deg(B) alpha mod Z.
ReduceResult reduce_pipeline(double lambda, const AlphaSpec& alpha, double E,
                             const ReduceConfig& cfg = {});

}  // namespace gaplab
