#include "gaplab/localization.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>

#include "gaplab/util.hpp"

namespace gaplab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double engine_scale(const std::vector<double>& diag, double off) {
  double m = 0.0;
  for (double d : diag) m = std::max(m, std::fabs(d));
  return m + 2.0 * std::fabs(off) + 1.0;
}

// Partial-pivoted LU of (T - sigma I) for symmetric tridiagonal T with
// constant off-diagonal. Row swaps fill a second superdiagonal. Exactly
// zero pivots are nudged to pivot_floor so inverse iteration can proceed.
struct TriLU {
  int n;
  std::vector<double> dl, dd, du, du2;
  std::vector<unsigned char> piv;

  TriLU(const std::vector<double>& diag, double off, double sigma,
        double pivot_floor)
      : n(static_cast<int>(diag.size())),
        dl(n, off),
        dd(n),
        du(n, off),
        du2(n, 0.0),
        piv(n, 0) {
    for (int i = 0; i < n; ++i) dd[i] = diag[i] - sigma;
    for (int i = 0; i + 1 < n; ++i) {
      if (std::fabs(dd[i]) >= std::fabs(dl[i])) {
        if (dd[i] == 0.0) dd[i] = pivot_floor;
        double m = dl[i] / dd[i];
        dl[i] = m;
        dd[i + 1] -= m * du[i];
      } else {
        double m = dd[i] / dl[i];
        dd[i] = dl[i];
        dl[i] = m;
        double t = du[i];
        du[i] = dd[i + 1];
        dd[i + 1] = t - m * dd[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -m * du[i + 1];
        }
        piv[i] = 1;
      }
    }
    if (dd[n - 1] == 0.0) dd[n - 1] = pivot_floor;
  }

  void solve(std::vector<double>& b) const {
    for (int i = 0; i + 1 < n; ++i) {
      if (piv[i]) std::swap(b[i], b[i + 1]);
      b[i + 1] -= dl[i] * b[i];
    }
    b[n - 1] /= dd[n - 1];
    if (n >= 2) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
    for (int i = n - 3; i >= 0; --i)
      b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
  }
};

void apply_tridiag(const std::vector<double>& diag, double off,
                   const std::vector<double>& v, std::vector<double>& out) {
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < n; ++i) {
    double s = diag[i] * v[i];
    if (i > 0) s += off * v[i - 1];
    if (i + 1 < n) s += off * v[i + 1];
    out[i] = s;
  }
}

struct FitAcc {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  long long n = 0;
  void add(double x, double y) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  double slope() const {
    double d = static_cast<double>(n) * sxx - sx * sx;
    return d != 0.0 ? (static_cast<double>(n) * sxy - sx * sy) / d : 0.0;
  }
};

// distinct |n_j| of the resonance set, always seeded with 0
std::vector<long long> resonance_scales(const ResonanceReport& ctx) {
  std::vector<long long> ns{0};
  for (const auto& r : ctx.resonances) ns.push_back(std::llabs(r.k));
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  return ns;
}

template <typename F>
double golden_section_max(F&& f, double lo, double hi, int iters,
                          double* argx) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  double xm = 0.5 * (a + b), fm = f(xm);
  if (f1 > fm) {
    fm = f1;
    xm = x1;
  }
  if (f2 > fm) {
    fm = f2;
    xm = x2;
  }
  if (argx) *argx = xm;
  return fm;
}

}  // namespace

// ---------------------------------------------------------------------------
// tridiagonal engine
// ---------------------------------------------------------------------------

int tridiag_count_below(const std::vector<double>& diag, double off,
                        double E) {
  int neg = 0;
  double d = 1.0;
  const double o2 = off * off;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    d = (diag[i] - E) - (i ? o2 / d : 0.0);
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++neg;
  }
  return neg;
}

std::vector<double> tridiag_eigenvalues(const std::vector<double>& diag,
                                        double off, double lo, double hi,
                                        double tol) {
  std::vector<double> out;
  if (diag.empty() || !(lo <= hi)) return out;
  const double sc = engine_scale(diag, off);
  if (tol <= 0.0) tol = 1e-13 * sc;
  const double hi_in = std::nextafter(hi, std::numeric_limits<double>::max());
  const int clo = tridiag_count_below(diag, off, lo);
  const int chi = tridiag_count_below(diag, off, hi_in);
  out.reserve(static_cast<std::size_t>(std::max(0, chi - clo)));
  for (int j = clo + 1; j <= chi; ++j) {
    double a = lo, b = hi_in;
    for (int it = 0; it < 200 && b - a > tol; ++it) {
      double mid = 0.5 * (a + b);
      if (tridiag_count_below(diag, off, mid) >= j)
        b = mid;
      else
        a = mid;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

TriPair tridiag_eigenpair(const std::vector<double>& diag, double off,
                          double shift,
                          const std::vector<const std::vector<double>*>& avoid) {
  const int n = static_cast<int>(diag.size());
  if (n == 0) throw stage_error("localization", "empty tridiagonal matrix");
  const double sc = engine_scale(diag, off);
  TriLU lu(diag, off, shift, 1e-30 * sc);

  auto rng = rng_stream(std::bit_cast<std::uint64_t>(shift),
                        static_cast<std::uint64_t>(n));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto deflate = [&](std::vector<double>& v) {
    for (const auto* w : avoid) {
      double d = 0.0;
      for (int i = 0; i < n; ++i) d += v[i] * (*w)[i];
      for (int i = 0; i < n; ++i) v[i] -= d * (*w)[i];
    }
  };
  auto norm2 = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };

  std::vector<double> x(n), tx(n);
  for (auto& e : x) e = unit(rng);
  deflate(x);

  // Each sweep suppresses content outside the target eigendirection by the
  // shift-gap ratio; the far tail of a localized eigenvector only becomes
  // componentwise clean after many sweeps, long after the 2-norm residual
  // has saturated. Run a fixed sweep budget and keep the final iterate.
  TriPair best, last;
  best.residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 36; ++it) {
    std::vector<double> w = x;
    lu.solve(w);
    deflate(w);
    double nw = norm2(w);
    if (!std::isfinite(nw) || nw == 0.0) {
      for (auto& e : w) e = unit(rng);
      deflate(w);
      nw = norm2(w);
      if (nw == 0.0) break;
    }
    for (auto& e : w) e /= nw;
    apply_tridiag(diag, off, w, tx);
    double ray = 0.0;
    for (int i = 0; i < n; ++i) ray += w[i] * tx[i];
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = tx[i] - ray * w[i];
      res += r * r;
    }
    res = std::sqrt(res);
    last.value = ray;
    last.vec = w;
    last.residual = res;
    if (res < best.residual) {
      best.value = ray;
      best.vec = w;
      best.residual = res;
    }
    x = std::move(w);
  }
  if (best.vec.empty())
    throw stage_error("localization", "inverse iteration failed to start");
  if (!last.vec.empty() && last.residual <= 10.0 * best.residual) return last;
  return best;
}

// ---------------------------------------------------------------------------
// dual eigenpairs
// ---------------------------------------------------------------------------

namespace {

// The inverse-iteration tail bottoms out at a pair-dependent noise floor
// (residual content of near-degenerate far states). Estimate it from the
// last few usable sites; amplitudes must clear it by 1e3 to count as signal
// in any decay fit. A genuinely decaying tail keeps its floor estimate a few
// e-folds below the fit windows, so this only bites where the tail is flat.
double tail_floor(const std::vector<double>& coeffs, int M, long long c,
                  int margin) {
  double fl = 0.0;
  for (int sgn : {1, -1}) {
    const long long reach =
        sgn > 0 ? (M - margin) - c : c + static_cast<long long>(M - margin);
    if (reach < 10) continue;
    for (long long s = reach - 4; s <= reach; ++s)
      fl = std::max(fl,
                    std::fabs(coeffs[static_cast<std::size_t>(c + sgn * s + M)]));
  }
  return fl;
}

// A genuine decay run covers consecutive sites; floor contamination surfaces
// as isolated spikes far beyond it. Keep only the leading contiguous run.
void truncate_at_gap(std::vector<std::pair<double, double>>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].first - pts[i - 1].first > 10.0) {
      pts.resize(i);
      return;
    }
}

double fit_decay_rate(const DualEigenpair& pe, int margin) {
  auto ns = resonance_scales(pe.resonance_ctx);
  const int M = pe.M;
  const long long c = pe.center;
  const long long reach =
      std::max((M - margin) - c, c + static_cast<long long>(M - margin));
  if (reach < 4) return 0.0;
  double a_best = 0.0, b_best = -1.0;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    double a = 3.0 * static_cast<double>(ns[j]);
    double b = (j + 1 < ns.size())
                   ? static_cast<double>(ns[j + 1]) / 3.0
                   : static_cast<double>(reach);
    b = std::min(b, static_cast<double>(reach));
    if (b - a > b_best - a_best) {
      a_best = a;
      b_best = b;
    }
  }
  if (!(b_best > a_best)) return 0.0;

  const double u_floor = 1e3 * tail_floor(pe.coeffs, M, c, margin);
  std::vector<std::pair<double, double>> pts;
  const long long s_lo =
      std::max<long long>(1, static_cast<long long>(std::floor(a_best)) + 1);
  const long long s_hi = static_cast<long long>(std::floor(b_best));
  for (long long s = s_lo; s <= s_hi; ++s)
    for (int sgn : {1, -1}) {
      long long k = c + sgn * s;
      if (std::llabs(k) > M - margin) continue;
      double u = std::fabs(pe.coeffs[static_cast<std::size_t>(k + M)]);
      if (u > 0.0 && u > u_floor)
        pts.emplace_back(static_cast<double>(s), std::log(u));
    }
  truncate_at_gap(pts);
  if (pts.size() < 2) return 0.0;
  double s_top = a_best;
  for (const auto& pt : pts) s_top = std::max(s_top, pt.first);
  const double cut = a_best + 0.1 * (s_top - a_best);  // drop the peak zone
  FitAcc acc;
  for (const auto& pt : pts)
    if (pt.first > cut) acc.add(pt.first, pt.second);
  return acc.n >= 2 ? -acc.slope() : 0.0;
}

}  // namespace

std::vector<DualEigenpair> dual_eigenpairs(double lambda,
                                           const AlphaSpec& alpha,
                                           const PhasePoint& theta, int M,
                                           double e_lo, double e_hi,
                                           double eps0, long long res_cap) {
  if (lambda == 0.0)
    throw stage_error("localization", "dual coupling must be nonzero");
  if (M < 100)
    throw stage_error("localization", "dual window needs M >= 100");

  const int n = 2 * M + 1;
  std::vector<double> diag(n);
  for (int k = -M; k <= M; ++k)
    diag[k + M] =
        2.0 * std::cos(2.0 * M_PI * alpha.phase_after(theta.value, k));
  const double sc = engine_scale(diag, lambda);

  auto eigs = tridiag_eigenvalues(diag, lambda, e_lo, e_hi);

  double eps0_eff = eps0;
  if (eps0_eff <= 0.0) {
    double beta_hat = 0.0;
    if (!alpha.rational) {
      int w = std::min<int>(10, static_cast<int>(alpha.irr.depth()) - 1);
      if (w >= 1) beta_hat = beta_estimate(alpha.irr, w);
    }
    eps0_eff = std::max(2.0 * beta_hat, 2.0);
  }
  const long long cap = res_cap > 0 ? res_cap : M;
  const int margin = M / 10;

  std::vector<DualEigenpair> out;
  out.reserve(eigs.size());
  std::vector<std::vector<double>> kept;
  std::vector<double> kept_val;
  for (double ev : eigs) {
    std::vector<const std::vector<double>*> avoid;
    for (std::size_t i = 0; i < kept.size(); ++i)
      if (std::fabs(kept_val[i] - ev) < 1e-9 * sc) avoid.push_back(&kept[i]);
    auto pr = tridiag_eigenpair(diag, lambda, ev, avoid);

    DualEigenpair pe;
    pe.E = pr.value;
    pe.lambda = lambda;
    pe.M = M;
    pe.residual = pr.residual;  // vec has unit norm

    int peak = 0;
    for (int i = 1; i < n; ++i)
      if (std::fabs(pr.vec[i]) > std::fabs(pr.vec[peak])) peak = i;
    pe.center = peak - M;

    double boundary_mass = 0.0;
    for (int i = 0; i < n; ++i)
      if (M - std::abs(i - M) <= margin)
        boundary_mass += pr.vec[i] * pr.vec[i];
    pe.boundary_contaminated = boundary_mass > 1e-8;

    if (theta.half_lattice && !alpha.rational)
      pe.theta =
          PhasePoint::lattice(theta.m + 2 * pe.center, theta.n, alpha.irr);
    else
      pe.theta = PhasePoint::real(alpha.phase_after(theta.value, pe.center));

    if (!alpha.rational) {
      pe.resonance_ctx = resonances(alpha.irr, pe.theta, eps0_eff, cap);
    } else {
      pe.resonance_ctx.theta = pe.theta.value;
      pe.resonance_ctx.eps0 = eps0_eff;
      pe.resonance_ctx.cap = 0;
    }

    const double pv = pr.vec[peak];
    pe.coeffs.resize(n);
    for (int i = 0; i < n; ++i) pe.coeffs[i] = pr.vec[i] / pv;
    pe.decay_rate = fit_decay_rate(pe, margin);

    kept.push_back(std::move(pr.vec));
    kept_val.push_back(pe.E);
    out.push_back(std::move(pe));
  }
  return out;
}

DualEigenpair dual_eigenpair_nearest(double lambda, const AlphaSpec& alpha,
                                     const PhasePoint& theta, int M,
                                     double e_target, double half_width,
                                     double eps0) {
  auto pairs = dual_eigenpairs(lambda, alpha, theta, M, e_target - half_width,
                               e_target + half_width, eps0);
  if (pairs.empty())
    throw stage_error("localization",
                      "no dual eigenvalue within the target window");
  std::size_t best = 0;
  for (std::size_t i = 1; i < pairs.size(); ++i)
    if (std::fabs(pairs[i].E - e_target) < std::fabs(pairs[best].E - e_target))
      best = i;
  return pairs[best];
}

// ---------------------------------------------------------------------------
// strong localization estimate
// ---------------------------------------------------------------------------

SLEReport verify_strong_localization(const DualEigenpair& pair, double c0,
                                     double eps1) {
  if (!(c0 > 1.0))
    throw stage_error("localization", "window constant C0 must exceed 1");
  double e1 = eps1;
  if (e1 <= 0.0) {
    double L = std::log(1.0 / std::fabs(pair.lambda));
    if (L <= 0.0)
      throw stage_error("localization",
                        "default eps1 needs |lambda| < 1; pass eps1 > 0");
    e1 = L / 64.0;
  }

  SLEReport rep;
  rep.c0 = c0;
  rep.eps1 = e1;

  const int M = pair.M;
  const int margin = M / 10;
  const long long c = pair.center;
  const long long smax =
      std::max((M - margin) - c, c + static_cast<long long>(M - margin));
  const double u_floor = 1e3 * tail_floor(pair.coeffs, M, c, margin);
  auto ns = resonance_scales(pair.resonance_ctx);

  for (std::size_t j = 0; j < ns.size(); ++j) {
    const bool last = j + 1 == ns.size();
    SLEWindow w;
    w.n_lo = ns[j];
    w.n_hi = last ? smax : ns[j + 1];
    const double lo = c0 * static_cast<double>(ns[j]);
    w.k_lo = static_cast<long long>(std::floor(lo)) + 1;
    w.k_hi = last ? smax
                  : static_cast<long long>(
                        std::ceil(static_cast<double>(ns[j + 1]) / c0)) -
                        1;
    if (!last && static_cast<double>(ns[j + 1]) <=
                     c0 * c0 * static_cast<double>(ns[j])) {
      w.skipped = true;
      w.note = "window empty: |n_{j+1}| <= C0^2 |n_j|";
      rep.windows.push_back(std::move(w));
      continue;
    }
    if (w.k_hi < w.k_lo) {
      w.skipped = true;
      w.note = last ? "window beyond the truncation"
                    : "no integer offsets between the margins";
      rep.windows.push_back(std::move(w));
      continue;
    }
    std::vector<std::pair<double, double>> pts;
    double cw = 0.0;
    long long npts = 0;
    for (long long s = w.k_lo; s <= w.k_hi; ++s)
      for (int sgn : {1, -1}) {
        long long k = c + sgn * s;
        if (std::llabs(k) > M - margin) continue;
        double u = std::fabs(pair.coeffs[static_cast<std::size_t>(k + M)]);
        cw = std::max(cw, u * std::exp(e1 * static_cast<double>(s)));
        if (u > 0.0 && u > u_floor)
          pts.emplace_back(static_cast<double>(s), std::log(u));
        ++npts;
      }
    if (npts == 0) {
      w.skipped = true;
      w.note = "window beyond the truncation";
      rep.windows.push_back(std::move(w));
      continue;
    }
    truncate_at_gap(pts);
    FitAcc acc;
    for (const auto& pt : pts) acc.add(pt.first, pt.second);
    w.c_min = cw;
    w.fitted_rate = acc.n >= 2 ? -acc.slope() : 0.0;
    rep.c_min = std::max(rep.c_min, cw);
    rep.windows.push_back(std::move(w));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// scaled determinants
// ---------------------------------------------------------------------------

double ScaledDet::log_abs() const {
  if (mant == 0.0) return kNegInf;
  return std::log(std::fabs(mant)) + static_cast<double>(e2) * M_LN2;
}

double ScaledDet::value() const {
  const long long e = std::clamp<long long>(e2, -2200, 2200);
  return std::ldexp(mant, static_cast<int>(e));
}

namespace {

// P_k recursion; peak_log (when asked for) records the largest intermediate
// magnitude, so peak_log - log|P_k| measures the cancellation loss baked into
// the final value.
ScaledDet pk_recursion(long long k, double theta, double E, double lam,
                       const AlphaSpec& alpha, long long site0,
                       double* peak_log) {
  double prev = 0.0, cur = 1.0;
  long long e2 = 0;
  double peak = 0.0;
  for (long long j = 0; j < k; ++j) {
    const double v =
        2.0 * lam *
        std::cos(2.0 * M_PI * alpha.phase_after(theta, site0 + j));
    const double next = (E - v) * cur - prev;
    prev = cur;
    cur = next;
    const double m = std::max(std::fabs(cur), std::fabs(prev));
    if (peak_log && m > 0.0)
      peak = std::max(peak, std::log(m) + static_cast<double>(e2) * M_LN2);
    if (m > 1e280 || (m > 0.0 && m < 1e-280)) {
      int ex;
      std::frexp(m, &ex);
      cur = std::ldexp(cur, -ex);
      prev = std::ldexp(prev, -ex);
      e2 += ex;
    }
  }
  if (peak_log) *peak_log = peak;
  ScaledDet out;
  if (cur == 0.0) return out;
  int ex;
  out.mant = std::frexp(cur, &ex);
  out.e2 = e2 + ex;
  return out;
}

}  // namespace

ScaledDet pk_determinant(long long k, double theta, double E, double lam,
                         const AlphaSpec& alpha, long long site0) {
  if (k < 0)
    throw stage_error("localization", "determinant order must be >= 0");
  return pk_recursion(k, theta, E, lam, alpha, site0, nullptr);
}

// ---------------------------------------------------------------------------
// Green entries and regularity
// ---------------------------------------------------------------------------

double GreenEntry::value() const {
  if (sign == 0) return 0.0;
  const double v = std::exp(log_abs);
  return sign < 0 ? -v : v;
}

namespace {

// Cramer-quotient Green entries; nullopt when the interval determinant is
// numerically singular. The direct pivoted solve cross-checks both entries
// whenever they sit in a regime where both computations are trustworthy.
std::optional<GreenRow> green_core(long long x1, long long x2, long long y,
                                   double E, double theta, double lam,
                                   const AlphaSpec& alpha) {
  const long long len = x2 - x1 + 1;
  double pk_den = 0.0, pk_l = 0.0, pk_r = 0.0;
  const auto den = pk_recursion(len, theta, E, lam, alpha, x1, &pk_den);
  if (den.sgn() == 0 || den.log_abs() < -690.0) return std::nullopt;
  const auto num_l = pk_recursion(x2 - y, theta, E, lam, alpha, y + 1, &pk_l);
  const auto num_r = pk_recursion(y - x1, theta, E, lam, alpha, x1, &pk_r);

  GreenRow row;
  row.x1 = x1;
  row.x2 = x2;
  row.y = y;
  row.to_left =
      GreenEntry{num_l.log_abs() - den.log_abs(), -num_l.sgn() * den.sgn()};
  row.to_right =
      GreenEntry{num_r.log_abs() - den.log_abs(), -num_r.sgn() * den.sgn()};

  // The quotient is only comparable at 1e-8 when neither side lost that many
  // digits: the recursion loses peak/|P| through cancellation near an interval
  // eigenvalue, and the pivoted solve loses the condition number.
  const double loss = std::max({pk_den - den.log_abs(), pk_l - num_l.log_abs(),
                                pk_r - num_r.log_abs()});
  if (len <= 4096 && loss <= 11.0) {
    std::vector<double> vdiag(static_cast<std::size_t>(len));
    for (long long i = 0; i < len; ++i)
      vdiag[static_cast<std::size_t>(i)] =
          2.0 * lam *
          std::cos(2.0 * M_PI * alpha.phase_after(theta, x1 + i));
    const double sc = engine_scale(vdiag, 1.0) + std::fabs(E);
    TriLU lu(vdiag, 1.0, E, 1e-300);
    double minpiv = std::numeric_limits<double>::infinity();
    for (double d : lu.dd) minpiv = std::min(minpiv, std::fabs(d));
    if (!(minpiv > 0.0) || sc / minpiv > 1e6) return row;
    std::vector<double> g(static_cast<std::size_t>(len), 0.0);
    std::vector<double> h(static_cast<std::size_t>(len), 0.0);
    g.front() = 1.0;
    h.back() = 1.0;
    lu.solve(g);
    lu.solve(h);
    double colmax = 0.0;
    for (long long i = 0; i < len; ++i)
      colmax = std::max({colmax, std::fabs(g[static_cast<std::size_t>(i)]),
                         std::fabs(h[static_cast<std::size_t>(i)])});
    const std::size_t yr = static_cast<std::size_t>(y - x1);
    const double direct[2] = {g[yr], h[yr]};
    const GreenEntry* ent[2] = {&row.to_left, &row.to_right};
    // A huge entry anywhere in the row marks a near-singular interval; there
    // the solve can be arbitrarily wrong with all pivots O(1) and the probed
    // edge columns small, so no per-entry magnitude test would catch it.
    double rowmax = 0.0;
    for (int s = 0; s < 2; ++s)
      rowmax = std::max(
          {rowmax, std::fabs(ent[s]->value()), std::fabs(direct[s])});
    if (!std::isfinite(rowmax) || rowmax > 1e4) return row;
    for (int s = 0; s < 2; ++s) {
      const double got = ent[s]->value();
      const double tol =
          1e-8 * std::max(1.0, std::fabs(direct[s])) + 1e-10 * colmax * sc;
      if (std::fabs(got - direct[s]) > tol)
        throw stage_error(
            "localization",
            "Green entry disagrees with the direct tridiagonal solve");
    }
  }
  return row;
}

}  // namespace

GreenRow green_entries(long long x1, long long x2, long long y, double E,
                       double theta, double lam, const AlphaSpec& alpha) {
  if (!(x1 <= y && y <= x2))
    throw stage_error("localization", "probe site outside the interval");
  auto row = green_core(x1, x2, y, E, theta, lam, alpha);
  if (!row)
    throw stage_error(
        "localization",
        "interval determinant is numerically singular at length " +
            std::to_string(x2 - x1 + 1));
  return *row;
}

RegularVerdict classify_regular(long long y, double m, long long k,
                                double delta, double E, double theta,
                                double lam, const AlphaSpec& alpha) {
  if (!(delta > 0.1 && delta < 0.5))
    throw stage_error("localization", "delta must lie in (1/10, 1/2)");
  if (!(m > 0.0))
    throw stage_error("localization", "decay rate m must be positive");
  if (k < 2) throw stage_error("localization", "interval length must be >= 2");

  RegularVerdict best;
  best.margin = kNegInf;
  bool any_geometry = false;
  for (long long x1 = y - k + 1; x1 <= y; ++x1) {
    const long long x2 = x1 + k - 1;
    const double d1 = static_cast<double>(y - x1);
    const double d2 = static_cast<double>(x2 - y);
    if (d1 < delta * static_cast<double>(k) - 1e-12 ||
        d2 < delta * static_cast<double>(k) - 1e-12)
      continue;
    any_geometry = true;
    auto row = green_core(x1, x2, y, E, theta, lam, alpha);
    if (!row) continue;  // singular interval cannot witness regularity
    const double m1 = -m * d1 - row->to_left.log_abs;
    const double m2 = -m * d2 - row->to_right.log_abs;
    const double margin = std::min(m1, m2);
    if (margin > best.margin) {
      best.margin = margin;
      best.x1 = x1;
      best.x2 = x2;
      best.log_g1 = row->to_left.log_abs;
      best.log_g2 = row->to_right.log_abs;
    }
    if (margin > 0.0) {
      best.regular = true;
      break;
    }
  }
  if (!any_geometry)
    throw stage_error("localization",
                      "no interval geometry admits both edge distances >= "
                      "delta * k; relax delta or enlarge k");
  return best;
}

// ---------------------------------------------------------------------------
// gamma-uniformity
// ---------------------------------------------------------------------------

GammaUniformReport gamma_uniform_test(const std::vector<double>& thetas,
                                      double gamma) {
  const int npts = static_cast<int>(thetas.size());
  if (npts < 2)
    throw stage_error("localization",
                      "gamma uniformity needs at least two phases");
  const int k = npts - 1;
  std::vector<double> z(npts);
  for (int i = 0; i < npts; ++i) z[i] = std::cos(2.0 * M_PI * thetas[i]);
  for (int i = 0; i < npts; ++i)
    for (int j = i + 1; j < npts; ++j)
      if (std::fabs(z[i] - z[j]) <= 1e-12)
        throw stage_error("localization",
                          "coincident nodes: |cos 2pi theta_" +
                              std::to_string(i) + " - cos 2pi theta_" +
                              std::to_string(j) + "| <= 1e-12");

  std::vector<double> den(npts, 0.0);
  for (int i = 0; i < npts; ++i)
    for (int j = 0; j < npts; ++j)
      if (j != i) den[i] += std::log(std::fabs(z[i] - z[j]));

  auto flog = [&](int i, double x) {
    double s = 0.0;
    for (int j = 0; j < npts; ++j)
      if (j != i) s += std::log(std::fabs(x - z[j]));
    return s - den[i];
  };

  const int N = std::max(8 * k, 64);
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(N) + 2);
  xs.push_back(-1.0);
  for (int t = 0; t < N; ++t)
    xs.push_back(std::cos(M_PI * (2.0 * t + 1.0) / (2.0 * N)));
  xs.push_back(1.0);

  GammaUniformReport rep;
  rep.log_max = kNegInf;
  const double h = 3.0 / static_cast<double>(N);
  for (int i = 0; i < npts; ++i) {
    double bx = xs[0], bv = flog(i, xs[0]);
    for (double x : xs) {
      double v = flog(i, x);
      if (v > bv) {
        bv = v;
        bx = x;
      }
    }
    double ax = bx;
    double rv = golden_section_max([&](double x) { return flog(i, x); },
                                   std::max(-1.0, bx - h),
                                   std::min(1.0, bx + h), 80, &ax);
    if (rv < bv) {
      rv = bv;
      ax = bx;
    }
    if (rv > rep.log_max) {
      rep.log_max = rv;
      rep.arg_x = ax;
      rep.arg_i = i;
    }
  }
  rep.log_bound = static_cast<double>(k) * gamma;
  rep.uniform = rep.log_max <= rep.log_bound;
  return rep;
}

// ---------------------------------------------------------------------------
// sine sums over convergent blocks
// ---------------------------------------------------------------------------

SinSumReport sin_sum_check(double x, int n, const IrrationalFrequency& alpha) {
  const auto& qd = alpha.qden();
  if (n < 0 || static_cast<std::size_t>(n) >= qd.size())
    throw stage_error("localization", "convergent index out of range");
  if (qd[static_cast<std::size_t>(n)] > bigint(2000000))
    throw stage_error("localization", "q_n too large for a direct sine sum");
  const long long qn =
      qd[static_cast<std::size_t>(n)].convert_to<long long>();
  const double av = alpha.value();

  SinSumReport rep;
  rep.q = qn;
  if (qn <= 1) return rep;  // empty product: the only term is excluded

  std::vector<double> s(static_cast<std::size_t>(qn));
  long long l0 = 0;
  for (long long l = 0; l < qn; ++l) {
    s[static_cast<std::size_t>(l)] =
        std::fabs(std::sin(M_PI * frac1(x + static_cast<double>(l) * av)));
    if (s[static_cast<std::size_t>(l)] < s[static_cast<std::size_t>(l0)])
      l0 = l;
  }
  double acc = 0.0;
  for (long long l = 0; l < qn; ++l) {
    if (l == l0) continue;
    acc += std::log(std::max(s[static_cast<std::size_t>(l)], 1e-300));
  }
  rep.value = acc + static_cast<double>(qn - 1) * M_LN2;
  rep.l0 = l0;
  rep.c_fitted = std::fabs(rep.value) / static_cast<double>(qn);
  return rep;
}

// ---------------------------------------------------------------------------
// orbit grid bounds for trigonometric polynomials
// ---------------------------------------------------------------------------

GridBoundReport polynomial_grid_bound_check(const TrigSeries& p, double x0,
                                            int r, int n,
                                            const IrrationalFrequency& alpha) {
  const auto& qd = alpha.qden();
  if (n < 0 || static_cast<std::size_t>(n + 1) >= qd.size())
    throw stage_error("localization",
                      "needs convergents q_n and q_{n+1}; deepen alpha");
  if (qd[static_cast<std::size_t>(n)] > bigint(1000000000))
    throw stage_error("localization", "q_n too large for a dense scan");
  const long long qn = qd[static_cast<std::size_t>(n)].convert_to<long long>();
  if (r < 1 || bigint(r) * qd[static_cast<std::size_t>(n)] >
                   qd[static_cast<std::size_t>(n + 1)])
    throw stage_error("localization",
                      "r outside 1..floor(q_{n+1}/q_n) at this depth");
  if (p.period != 1)
    throw stage_error("localization", "period-1 polynomial required");

  const long long k = static_cast<long long>(r) * qn - 1;
  int n_eff = 0;
  for (int j = 1; j <= p.nmax; ++j)
    if (std::abs(p.at(j)) != 0.0 || std::abs(p.at(-j)) != 0.0)
      n_eff = j;
  if (2LL * n_eff > k)
    throw stage_error("localization",
                      "essential degree " + std::to_string(2 * n_eff) +
                          " exceeds the degree budget r q_n - 1 = " +
                          std::to_string(k));

  GridBoundReport rep;
  rep.k = k;

  const long long N = 32 * (k + 1);
  double bx = 0.0, bv = -1.0;
  for (long long t = 0; t < N; ++t) {
    const double x = static_cast<double>(t) / static_cast<double>(N);
    const double v = std::abs(p.eval(x));
    if (v > bv) {
      bv = v;
      bx = x;
    }
  }
  double ax = bx;
  const double h = 1.0 / static_cast<double>(N);
  double rv = golden_section_max(
      [&](double x) { return std::abs(p.eval(x)); }, bx - h, bx + h, 80, &ax);
  rep.sup_dense = std::max(bv, rv);

  const double av = alpha.value();
  double gm = 0.0;
  for (long long j = 0; j <= k; ++j)
    gm = std::max(
        gm, std::abs(p.eval(frac1(x0 + static_cast<double>(j) * av))));
  rep.sup_grid = gm;
  rep.ratio = gm > 0.0 ? rep.sup_dense / gm : (rep.sup_dense > 0.0 ? 1e300 : 1.0);
  return rep;
}

}  // namespace gaplab
