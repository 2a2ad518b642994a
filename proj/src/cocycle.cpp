#include "gaplab/cocycle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

namespace gaplab {

namespace {
constexpr long long kResync = 1LL << 20;  // exact phase re-anchoring cadence
}

Mat2d amo_matrix_real(const CocycleSpec& spec, double x) {
  double v = spec.E - 2.0 * spec.lambda * std::cos(2.0 * M_PI * x);
  return {v, -1.0, 1.0, 0.0};
}

Mat2c amo_matrix(const CocycleSpec& spec, double x) {
  if (spec.im_offset == 0.0) return to_complex(amo_matrix_real(spec, x));
  // cos 2 pi (x + i eps) = cos 2 pi x cosh 2 pi eps - i sin 2 pi x sinh 2 pi eps
  double ch = std::cosh(2.0 * M_PI * spec.im_offset);
  double sh = std::sinh(2.0 * M_PI * spec.im_offset);
  cplx cz(std::cos(2.0 * M_PI * x) * ch, -std::sin(2.0 * M_PI * x) * sh);
  cplx v = cplx(spec.E) - 2.0 * spec.lambda * cz;
  return {v, cplx(-1.0), cplx(1.0), cplx(0.0)};
}

TrigMat amo_trig(const CocycleSpec& spec) {
  TrigMat m = TrigMat::identity(1);
  TrigSeries v(1, 1);
  v.set(0, cplx(spec.E));
  v.set(1, cplx(-spec.lambda));
  v.set(-1, cplx(-spec.lambda));
  m.e[0][0] = v;
  m.e[0][1] = TrigSeries::constant(-1.0, 1);
  m.e[1][0] = TrigSeries::constant(1.0, 1);
  m.e[1][1] = TrigSeries::constant(0.0, 1);
  return m;
}

double phase_at(const AlphaSpec& alpha, double x0, long long k) {
  if (std::llabs(k) <= kResync) return frac1(x0 + k * alpha.value());
  return alpha.phase_after(x0, k);
}

ScaledProduct<double> transfer_product_real(const CocycleSpec& spec, double x0,
                                            long long n) {
  if (n < 1) throw stage_error("cocycle", "transfer product needs n >= 1");
  if (spec.im_offset != 0.0)
    throw stage_error("cocycle", "complex phase needs the complex product");
  ScaledProduct<double> p;
  const double ad = spec.alpha.value();
  const double lam2 = 2.0 * spec.lambda;
  double x = frac1(x0);
  for (long long k = 0; k < n; ++k) {
    if (k > 0 && (k & (kResync - 1)) == 0) x = phase_at(spec.alpha, x0, k);
    double v = spec.E - lam2 * std::cos(2.0 * M_PI * x);
    p.mul_left({v, -1.0, 1.0, 0.0});
    x += ad;
    if (x >= 1.0) x -= 1.0;
  }
  return p;
}

ScaledProduct<cplx> transfer_product(const CocycleSpec& spec, double x0,
                                     long long n) {
  if (n < 1) throw stage_error("cocycle", "transfer product needs n >= 1");
  ScaledProduct<cplx> p;
  const double ad = spec.alpha.value();
  const double ch = std::cosh(2.0 * M_PI * spec.im_offset);
  const double sh = std::sinh(2.0 * M_PI * spec.im_offset);
  double x = frac1(x0);
  for (long long k = 0; k < n; ++k) {
    if (k > 0 && (k & (kResync - 1)) == 0) x = phase_at(spec.alpha, x0, k);
    cplx cz(std::cos(2.0 * M_PI * x) * ch, -std::sin(2.0 * M_PI * x) * sh);
    cplx v = cplx(spec.E) - 2.0 * spec.lambda * cz;
    p.mul_left({v, cplx(-1.0), cplx(1.0), cplx(0.0)});
    x += ad;
    if (x >= 1.0) x -= 1.0;
  }
  return p;
}

LyapReport lyapunov(const CocycleSpec& spec, long long n_iters,
                    int n_phase_samples, unsigned long long seed) {
  if (n_iters < 1000)
    throw stage_error("cocycle", "lyapunov needs n_iters >= 1000");
  if (n_phase_samples < 1)
    throw stage_error("cocycle", "lyapunov needs at least one phase sample");
  std::vector<double> vals(static_cast<std::size_t>(n_phase_samples));
  parallel_for(vals.size(), [&](std::size_t s) {
    auto rng = rng_stream(seed, s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    double ln = spec.im_offset == 0.0
                    ? transfer_product_real(spec, x, n_iters).log_norm2()
                    : transfer_product(spec, x, n_iters).log_norm2();
    vals[s] = ln / static_cast<double>(n_iters);
  });
  LyapReport r;
  r.n_samples = n_phase_samples;
  r.n_iters = n_iters;
  r.mean = pairwise_sum(vals) / static_cast<double>(n_phase_samples);
  r.maxv = *std::max_element(vals.begin(), vals.end());
  r.minv = *std::min_element(vals.begin(), vals.end());
  r.spread = r.maxv - r.minv;
  return r;
}

namespace {

// one fibered orbit of the Schroedinger cocycle: the image angle of a
// direction with representative theta in (-pi/2, pi/2] is
// psi = atan2(cos theta, v cos theta - sin theta) in [0, pi], so the true
// advance lies in (-pi/2, 3pi/2) with no branch choice to make
double rot_single_amo(const CocycleSpec& spec, double x0, double phi0,
                      long long n) {
  double th = std::remainder(phi0, M_PI);
  const double ad = spec.alpha.value();
  const double lam2 = 2.0 * spec.lambda;
  double x = frac1(x0);
  double total = 0.0;
  for (long long k = 0; k < n; ++k) {
    if (k > 0 && (k & (kResync - 1)) == 0) x = phase_at(spec.alpha, x0, k);
    double v = spec.E - lam2 * std::cos(2.0 * M_PI * x);
    double c = std::cos(th), s = std::sin(th);
    double psi = std::atan2(c, v * c - s);
    total += psi - th;
    th = psi > M_PI_2 ? psi - M_PI : psi;
    x += ad;
    if (x >= 1.0) x -= 1.0;
  }
  return total / (2.0 * M_PI * static_cast<double>(n));
}

}  // namespace

RotReport rotation_number_report(const CocycleSpec& spec, long long n_iters,
                                 double x0, double phi0) {
  if (n_iters < 1000)
    throw stage_error("cocycle", "rotation number needs n_iters >= 1000");
  if (spec.im_offset != 0.0)
    throw stage_error("cocycle", "rotation number is defined for real phase");
  static const double xoff[4] = {0.0, 0.3779644730, 0.6123724357, 0.8660254038};
  static const double poff[4] = {0.0, 0.7, 1.9, 2.6};
  RotReport r;
  std::array<double, 4> vals{};
  parallel_for(4, [&](std::size_t i) {
    vals[i] = rot_single_amo(spec, frac1(x0 + xoff[i]), phi0 + poff[i],
                             n_iters);
  });
  r.starts = vals;
  double lo = *std::min_element(vals.begin(), vals.end());
  double hi = *std::max_element(vals.begin(), vals.end());
  r.spread = hi - lo;
  double mean = (vals[0] + vals[1] + vals[2] + vals[3]) / 4.0;
  r.value = std::min(0.5, std::max(0.0, mean));
  double tol = 5.0 / static_cast<double>(n_iters);
  if (r.spread > tol)
    throw stage_error("cocycle",
                      "rotation number starts disagree: spread " +
                          std::to_string(r.spread) + " > " +
                          std::to_string(tol));
  return r;
}

double rotation_number(const CocycleSpec& spec, long long n_iters, double x0,
                       double phi0) {
  return rotation_number_report(spec, n_iters, x0, phi0).value;
}

double rotation_number_generic(const std::function<Mat2d(double)>& a,
                               const AlphaSpec& alpha, long long n_iters,
                               double x0, double phi0) {
  if (n_iters < 1000)
    throw stage_error("cocycle", "rotation number needs n_iters >= 1000");
  const double ad = alpha.value();
  // Canonical lift through the polar split a = R_psi * p: the positive part p
  // never turns a direction by pi/2 or more, so its advance has an unambiguous
  // nearest branch, while psi = atan2(c - b, a + d) is smooth on all of SL2
  // (a + d and c - b never vanish together there).  A nearest-branch rule on
  // the full advance would silently drop pi whenever the mean advance leaves
  // (-pi/2, pi/2], which is the typical mid-band situation.
  //
  // The psi branch must be continuous in x, not along the orbit, so it is
  // unwrapped once on a grid over one period.  Values must be 1-periodic and
  // the loop null-homotopic (conjugates of Schroedinger cocycles are: the
  // half-winding of a period-2 conjugator cancels between B(x+alpha)^{-1} and
  // B(x)).
  const int G = 4096;
  std::vector<double> psig(static_cast<std::size_t>(G) + 1);
  for (int j = 0; j <= G; ++j) {
    Mat2d m = a(static_cast<double>(j) / G);
    double raw = std::atan2(m.c - m.b, m.a + m.d);
    if (j == 0) {
      psig[0] = raw;
      continue;
    }
    double d = std::remainder(raw - psig[j - 1], 2.0 * M_PI);
    if (std::abs(d) > 2.5)
      throw stage_error("cocycle", "rotation angle under-resolved on grid");
    psig[j] = psig[j - 1] + d;
  }
  double wind = (psig[G] - psig[0]) / (2.0 * M_PI);
  if (std::abs(wind - std::llround(wind)) > 1e-6)
    throw stage_error("cocycle", "rotation branch fails to close over x");
  if (std::llround(wind) != 0)
    throw stage_error("cocycle", "cocycle not homotopic to the identity");

  auto one = [&](double xs, double ps) {
    double th = std::remainder(ps, M_PI);
    double vx = std::cos(th), vy = std::sin(th);
    double x = frac1(xs);
    double total = 0.0;
    for (long long k = 0; k < n_iters; ++k) {
      if (k > 0 && (k & (kResync - 1)) == 0) x = phase_at(alpha, xs, k);
      Mat2d m = a(x);
      double raw = std::atan2(m.c - m.b, m.a + m.d);
      double g = x * G;
      int j = std::min(static_cast<int>(g), G - 1);
      double fr = g - j;
      double ref = psig[j] * (1.0 - fr) + psig[j + 1] * fr;
      double psi = raw + 2.0 * M_PI * std::round((ref - raw) / (2.0 * M_PI));
      if (std::abs(psi - ref) > 2.0)
        throw stage_error("cocycle", "rotation branch lookup failed");
      double wx = m.a * vx + m.b * vy, wy = m.c * vx + m.d * vy;
      double nn = std::hypot(wx, wy);
      if (!(nn > 0.0) || !std::isfinite(nn))
        throw stage_error("cocycle", "singular cocycle value");
      // positive-part advance: angle gained beyond the rotation R_psi
      double cp = std::cos(psi), sp = std::sin(psi);
      double px = cp * wx + sp * wy, py = -sp * wx + cp * wy;
      double adv = std::remainder(
          std::atan2(py, px) - std::atan2(vy, vx), M_PI);
      total += psi + adv;
      vx = wx / nn;
      vy = wy / nn;
      x += ad;
      if (x >= 1.0) x -= 1.0;
    }
    return total / (2.0 * M_PI * static_cast<double>(n_iters));
  };
  static const double xoff[4] = {0.0, 0.3779644730, 0.6123724357, 0.8660254038};
  static const double poff[4] = {0.0, 0.7, 1.9, 2.6};
  std::array<double, 4> vals{};
  parallel_for(4, [&](std::size_t i) {
    vals[i] = one(frac1(x0 + xoff[i]), phi0 + poff[i]);
  });
  // the canonical lift gives genuine real values: no mod-1/2 alignment needed
  double lo = *std::min_element(vals.begin(), vals.end());
  double hi = *std::max_element(vals.begin(), vals.end());
  if (hi - lo > 5.0 / static_cast<double>(n_iters))
    throw stage_error("cocycle", "rotation number starts disagree: spread " +
                                     std::to_string(hi - lo));
  double mean = (vals[0] + vals[1] + vals[2] + vals[3]) / 4.0;
  double rho = std::fmod(mean, 0.5);
  return rho < 0.0 ? rho + 0.5 : rho;
}

namespace {

// most-contracted right singular direction of a real 2x2 (unit scale is fine)
void contracted_dir(const Mat2d& m, double& vx, double& vy) {
  double m11 = m.a * m.a + m.c * m.c;
  double m22 = m.b * m.b + m.d * m.d;
  double m12 = m.a * m.b + m.c * m.d;
  double diff = m11 - m22;
  double disc = std::sqrt(diff * diff + 4.0 * m12 * m12);
  double lmin = 0.5 * (m11 + m22 - disc);
  double ax = m12, ay = lmin - m11;
  double bx = lmin - m22, by = m12;
  double na = ax * ax + ay * ay, nb = bx * bx + by * by;
  if (na < nb) {
    ax = bx;
    ay = by;
    na = nb;
  }
  if (na < 1e-60) {  // isotropic: no distinguished direction
    vx = 1.0;
    vy = 0.0;
    return;
  }
  double inv = 1.0 / std::sqrt(na);
  vx = ax * inv;
  vy = ay * inv;
}

}  // namespace

UHReport uniform_hyperbolicity_test(const CocycleSpec& spec, long long n,
                                    double gamma_floor) {
  if (spec.im_offset != 0.0)
    throw stage_error("cocycle", "hyperbolicity test requires eps = 0");
  if (n < 8) throw stage_error("cocycle", "hyperbolicity test needs n >= 8");
  const int grid = 64;
  long long n2 = n + std::max<long long>(8, n / 8);
  std::vector<double> rates(grid);
  std::vector<char> cone(grid, 1);
  parallel_for(grid, [&](std::size_t j) {
    double x = static_cast<double>(j) / grid;
    auto p1 = transfer_product_real(spec, x, n);
    auto p2 = transfer_product_real(spec, x, n2);
    rates[j] = p1.log_norm2() / static_cast<double>(n);
    double ax, ay, bx, by;
    contracted_dir(p1.unit, ax, ay);
    contracted_dir(p2.unit, bx, by);
    cone[j] = std::abs(ax * by - ay * bx) <= 0.15 ? 1 : 0;
  });
  UHReport r;
  r.rate = *std::min_element(rates.begin(), rates.end());
  r.growth_ok = r.rate >= std::log(gamma_floor);
  r.cone_ok = std::all_of(cone.begin(), cone.end(), [](char c) { return c; });
  r.verdict = r.growth_ok ? (r.cone_ok ? "true" : "inconclusive") : "false";
  return r;
}

TrigMat sl2_inverse_poly(const TrigMat& b) {
  TrigMat inv;
  inv.period = b.period;
  inv.e[0][0] = b.e[1][1];
  inv.e[0][1] = b.e[0][1] * cplx(-1.0);
  inv.e[1][0] = b.e[1][0] * cplx(-1.0);
  inv.e[1][1] = b.e[0][0];
  return inv;
}

TrigMat conjugate_cocycle_fn(const TrigMat& b,
                             const std::function<Mat2c(double)>& a,
                             int a_degree, int a_period,
                             const AlphaSpec& alpha) {
  const int per = std::max(b.period, a_period);
  const int db = b.degree_hint() * (per / b.period);
  const int da = a_degree * (per / a_period);
  const int kee = 2 * db + da;
  int m = 64;
  while (m < 4 * (kee + 1)) m <<= 1;
  const double ad = alpha.value();
  std::vector<Mat2c> cv(static_cast<std::size_t>(m));
  double max_norm = 0.0;
  for (int j = 0; j < m; ++j) {
    double x = static_cast<double>(j) * per / m;
    Mat2c bx = b.eval(cplx(x, 0.0));
    Mat2c ba = b.eval(cplx(x + ad, 0.0));
    cplx dx = bx.det(), dxa = ba.det();
    if (std::abs(dx - cplx(1.0)) > 1e-8 || std::abs(dxa - cplx(1.0)) > 1e-8)
      throw stage_error("cocycle", "conjugator determinant drifts from 1");
    double cond = bx.norm2() * bx.norm2() / std::abs(dx);
    if (cond > 1e8)
      throw stage_error("cocycle", "conjugator nearly singular on grid");
    cv[j] = ba.inv() * a(x) * bx;
    max_norm = std::max(max_norm, cv[j].fro());
  }
  std::vector<cplx> s(static_cast<std::size_t>(m));
  TrigMat out;
  out.period = per;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      for (int j = 0; j < m; ++j) {
        const Mat2c& mm = cv[j];
        s[j] = i == 0 ? (k == 0 ? mm.a : mm.b) : (k == 0 ? mm.c : mm.d);
      }
      // entry tails are judged against the whole matrix scale: a row that is
      // identically zero must not report its rounding noise as aliasing
      TrigSeries ts = TrigSeries::from_grid(per, s, kee, max_norm);
      if (ts.tail > 1e-12)
        throw stage_error("cocycle", "conjugation aliases: tail energy " +
                                         std::to_string(ts.tail));
      ts.trim();
      out.e[i][k] = ts;
    }
  // exactness on the sampling grid
  for (int j = 0; j < m; j += std::max(1, m / 64)) {
    double x = static_cast<double>(j) * per / m;
    if ((out.eval(cplx(x, 0.0)) - cv[j]).fro() > 1e-10 * (1.0 + max_norm))
      throw stage_error("cocycle", "conjugation projection off-grid");
  }
  return out;
}

TrigMat conjugate_cocycle(const TrigMat& b, const TrigMat& a,
                          const AlphaSpec& alpha) {
  return conjugate_cocycle_fn(
      b, [&](double x) { return a.eval(cplx(x, 0.0)); }, a.degree_hint(),
      a.period, alpha);
}

int degree(const TrigMat& b) {
  TrigSeries f = b.e[0][0] + b.e[1][0] * cplx(0.0, 1.0);
  f.trim();
  const int per = f.period;
  // angle accumulation over one period
  int grid = std::max(4096, 64 * (f.nmax + 1));
  double minabs = 1e300, total = 0.0, prev = 0.0;
  for (int j = 0; j <= grid; ++j) {
    cplx v = f.eval(static_cast<double>(j) * per / grid);
    minabs = std::min(minabs, std::abs(v));
    double ang = std::arg(v);
    if (j > 0) {
      double d = std::remainder(ang - prev, 2.0 * M_PI);
      if (std::abs(d) > 2.8)
        throw stage_error("cocycle", "degree: winding under-resolved");
      total += d;
    }
    prev = ang;
  }
  if (minabs < 1e-8)
    throw stage_error("cocycle", "degree: first column nearly vanishes");
  double w = total / (2.0 * M_PI);
  long long wind = std::llround(w);
  if (std::abs(w - static_cast<double>(wind)) > 1e-3)
    throw stage_error("cocycle", "degree: non-integer winding " +
                                     std::to_string(w));
  // zero counting of z^{-lo} f on the unit disk via the companion matrix
  double top = 0.0;
  for (int k = -f.nmax; k <= f.nmax; ++k)
    top = std::max(top, std::abs(f.at(k)));
  int lo = -f.nmax, hi = f.nmax;
  while (lo <= hi && std::abs(f.at(lo)) <= 1e-12 * top) ++lo;
  while (hi >= lo && std::abs(f.at(hi)) <= 1e-12 * top) --hi;
  if (lo > hi) throw stage_error("cocycle", "degree: zero column");
  long long zcount = 0;
  int deg = hi - lo;
  if (deg > 0) {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
    cplx lead = f.at(hi);
    for (int r = 1; r < deg; ++r) comp(r, r - 1) = 1.0;
    for (int r = 0; r < deg; ++r) comp(r, deg - 1) = -f.at(lo + r) / lead;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    for (int r = 0; r < deg; ++r)
      if (std::abs(es.eigenvalues()(r)) < 1.0) ++zcount;
  }
  long long wind2 = zcount + lo;
  if (wind2 != wind)
    throw stage_error("cocycle", "degree methods disagree: winding " +
                                     std::to_string(wind) + " vs zeros " +
                                     std::to_string(wind2));
  return static_cast<int>(wind);
}

}  // namespace gaplab
