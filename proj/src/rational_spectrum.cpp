#include "gaplab/rational_spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaplab/mat2.hpp"
#include "gaplab/trig.hpp"

namespace gaplab {

double discriminant(double E, double theta, double lambda, long long p,
                    long long q) {
  if (q < 1) throw stage_error("spectrum", "q must be positive");
  Mat2d m = Mat2d::id();
  for (long long k = 0; k < q; ++k) {
    // phase theta + k p/q; k p stays well inside integer range for sane q
    double x = theta + static_cast<double>(k * p) / static_cast<double>(q);
    double v = E - 2.0 * lambda * std::cos(2.0 * M_PI * x);
    m = Mat2d{v, -1.0, 1.0, 0.0} * m;
  }
  return m.tr();
}

namespace {

// coefficients (ascending, monic, degree q) of E -> tr A_q(theta) at fixed
// theta: each transfer step multiplies the top row by the linear factor
// (E - v_k) and shifts, so the whole trace is assembled in O(q^2)
std::vector<double> trace_poly(double theta, double lambda, long long p,
                               long long q) {
  std::vector<double> a{1.0}, b{0.0}, c{0.0}, d{1.0};
  auto linmul = [](const std::vector<double>& f, double s) {
    // (E + s) * f
    std::vector<double> out(f.size() + 1, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      out[i + 1] += f[i];
      out[i] += s * f[i];
    }
    return out;
  };
  auto sub = [](std::vector<double> f, const std::vector<double>& g) {
    if (f.size() < g.size()) f.resize(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) f[i] -= g[i];
    return f;
  };
  for (long long k = 0; k < q; ++k) {
    double x = theta + static_cast<double>(k * p) / static_cast<double>(q);
    double v = 2.0 * lambda * std::cos(2.0 * M_PI * x);
    std::vector<double> na = sub(linmul(a, -v), c);
    std::vector<double> nb = sub(linmul(b, -v), d);
    c = std::move(a);
    d = std::move(b);
    a = std::move(na);
    b = std::move(nb);
  }
  std::vector<double> tr = a;
  if (tr.size() < d.size()) tr.resize(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) tr[i] += d[i];
  tr.resize(static_cast<std::size_t>(q) + 1, 0.0);
  return tr;
}

double horner(const std::vector<double>& f, double x) {
  double v = 0.0;
  for (std::size_t i = f.size(); i-- > 0;) v = v * x + f[i];
  return v;
}

double horner_deriv(const std::vector<double>& f, double x) {
  double v = 0.0;
  for (std::size_t i = f.size(); i-- > 1;) v = v * x + f[i] * i;
  return v;
}

// real parts of the roots of a monic polynomial via the companion matrix of
// the variable rescaled by R (keeps the matrix balanced for moderate q)
std::vector<double> poly_roots(const std::vector<double>& f, double R) {
  const int n = static_cast<int>(f.size()) - 1;
  if (n < 1) return {};
  std::vector<double> g(f.size());
  double pw = std::pow(R, -n);
  for (int k = 0; k <= n; ++k) {
    g[k] = f[k] * pw;
    pw *= R;
  }
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int r = 1; r < n; ++r) comp(r, r - 1) = 1.0;
  for (int r = 0; r < n; ++r) comp(r, n - 1) = -g[r];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<double> roots(n);
  for (int r = 0; r < n; ++r) roots[r] = R * es.eigenvalues()(r).real();
  std::sort(roots.begin(), roots.end());
  return roots;
}

// sharpen a companion seed on the exact polynomial: bracketed bisection when
// a sign change exists nearby, a few guarded Newton steps at tangencies
double polish_root(const std::vector<double>& f, double seed, double R,
                   double tol) {
  double h = std::max(1e-12 * R, 1e-14);
  while (h <= 1e-3 * R) {
    double fl = horner(f, seed - h), fr = horner(f, seed + h);
    if ((fl < 0.0) != (fr < 0.0)) {
      double lo = seed - h, hi = seed + h;
      for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = horner(f, mid);
        if ((fm < 0.0) == (fl < 0.0)) {
          lo = mid;
          fl = fm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    h *= 4.0;
  }
  // tangency (closed gap): fall back to Newton while the slope is usable
  double r = seed;
  for (int i = 0; i < 6; ++i) {
    double fp = horner_deriv(f, r);
    if (std::abs(fp) < 1e-10) break;
    double step = horner(f, r) / fp;
    if (!std::isfinite(step)) break;
    r -= step;
    if (std::abs(step) < tol) break;
  }
  return r;
}

long long mod_inverse(long long p, long long q) {
  long long r0 = q, r1 = ((p % q) + q) % q, t0 = 0, t1 = 1;
  while (r1 != 0) {
    long long qu = r0 / r1;
    long long r2 = r0 - qu * r1, t2 = t0 - qu * t1;
    r0 = r1;
    r1 = r2;
    t0 = t1;
    t1 = t2;
  }
  if (r0 != 1) throw stage_error("spectrum", "p and q are not coprime");
  return ((t0 % q) + q) % q;
}

}  // namespace

Spectrum spectrum_rational(double lambda, long long p, long long q,
                           double tol) {
  if (q < 1) throw stage_error("spectrum", "q must be positive");
  if (lambda == 0.0)
    throw stage_error("spectrum", "lambda must be nonzero");
  long long pr = ((p % q) + q) % q;
  if (std::gcd(pr == 0 ? q : pr, q) != 1)
    throw stage_error("spectrum", "p and q are not coprime");

  const double R = 2.0 + 2.0 * std::abs(lambda) + 1.0;
  const double Et = R;  // probe energy above the spectrum

  // theta-wave of the discriminant: support {0, q} with E-independent phase
  const int m = static_cast<int>(8 * q);
  std::vector<cplx> samples(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    samples[j] = discriminant(Et, static_cast<double>(j) / m, lambda, pr, q);
  std::vector<cplx> bins = dft(samples, false);
  double top = 0.0;
  for (const auto& z : bins) top = std::max(top, std::abs(z));
  for (int k = 1; k < m; ++k) {
    if (k == q || k == m - q) continue;
    if (std::abs(bins[k]) > 1e-9 * top)
      throw stage_error("spectrum", "discriminant has spurious theta modes");
  }
  cplx cq = bins[static_cast<std::size_t>(q)] / static_cast<double>(m);
  double amp = 2.0 * std::abs(cq);
  double amp_ref = 2.0 * std::pow(std::abs(lambda), static_cast<double>(q));
  if (amp > 1e-9 * top && std::abs(amp - amp_ref) > 1e-6 * amp_ref)
    throw stage_error("spectrum", "theta-wave amplitude off its closed form");
  double phase = std::arg(cq);
  double th_max = frac1(-phase / (2.0 * M_PI * q));          // cos term = +1
  double th_min = frac1((M_PI - phase) / (2.0 * M_PI * q));  // cos term = -1

  // re-verify extremality of the two-point reduction on a 4q grid
  if (amp > 1e-9 * top) {
    double dmax = discriminant(Et, th_max, lambda, pr, q);
    double dmin = discriminant(Et, th_min, lambda, pr, q);
    for (int j = 0; j < 4 * q; ++j) {
      double v = discriminant(Et, static_cast<double>(j) / (4.0 * q), lambda,
                              pr, q);
      if (v > dmax + 1e-9 * top || v < dmin - 1e-9 * top)
        throw stage_error("spectrum", "extremal theta reduction failed");
    }
  }

  // edges: min-curve hits +2 (D = 2 + a), max-curve hits -2 (D = -2 - a)
  std::vector<double> f_min = trace_poly(th_min, lambda, pr, q);
  std::vector<double> f_max = trace_poly(th_max, lambda, pr, q);
  f_min[0] -= 2.0;
  f_max[0] += 2.0;

  struct EdgePt {
    double e;
    int curve;  // 0: f_min (residual at th_min), 1: f_max
  };
  std::vector<EdgePt> edges;
  for (double r : poly_roots(f_min, R))
    edges.push_back({polish_root(f_min, r, R, tol), 0});
  for (double r : poly_roots(f_max, R))
    edges.push_back({polish_root(f_max, r, R, tol), 1});
  if (edges.size() != static_cast<std::size_t>(2 * q))
    throw stage_error("spectrum", "edge count mismatch");
  std::sort(edges.begin(), edges.end(),
            [](const EdgePt& a, const EdgePt& b) { return a.e < b.e; });

  Spectrum s;
  s.lambda = lambda;
  s.p = pr;
  s.q = q;
  for (long long j = 0; j < q; ++j) {
    const EdgePt& lo = edges[static_cast<std::size_t>(2 * j)];
    const EdgePt& hi = edges[static_cast<std::size_t>(2 * j + 1)];
    Band b;
    b.index = static_cast<int>(j + 1);
    b.lo = lo.e;
    b.hi = hi.e;
    b.res_lo = std::abs(discriminant(lo.e, lo.curve == 0 ? th_min : th_max,
                                     lambda, pr, q)) -
               2.0;
    b.res_hi = std::abs(discriminant(hi.e, hi.curve == 0 ? th_min : th_max,
                                     lambda, pr, q)) -
               2.0;
    if (b.hi - b.lo < tol) {
      b.lo = b.hi = 0.5 * (b.lo + b.hi);
      b.degenerate = true;
    }
    if (j > 0 && s.bands.back().hi > b.lo + 1e-9 * R)
      throw stage_error("spectrum", "bands overlap: structure inconsistent");
    s.bands.push_back(b);
  }
  return s;
}

void gap_labels(Spectrum& s, int theta_grid, int M) {
  if (s.bands.size() != static_cast<std::size_t>(s.q))
    throw stage_error("spectrum", "bands not computed");
  s.gaps.clear();
  if (s.q <= 1) return;
  long long pinv = mod_inverse(s.p == 0 ? 1 : s.p, s.q);
  AlphaSpec alpha = AlphaSpec::make_rational(s.p, s.q);
  for (long long j = 1; j < s.q; ++j) {
    GapReport g;
    g.lo = s.bands[static_cast<std::size_t>(j - 1)].hi;
    g.hi = s.bands[static_cast<std::size_t>(j)].lo;
    g.length = std::max(0.0, g.hi - g.lo);
    g.j = static_cast<int>(j);
    long long l = (j * pinv) % s.q;
    if (2 * l > s.q) l -= s.q;  // representative in (-q/2, q/2], ties positive
    g.label = l;
    g.open = g.length > 1e-8;
    double mid = 0.5 * (g.lo + g.hi);
    double n = ids_sturm(mid, s.lambda, alpha, theta_grid, M);
    double want = static_cast<double>(j) / static_cast<double>(s.q);
    if (std::abs(n - want) > 2.0 / M + 1e-3)
      throw stage_error("spectrum",
                        "gap IDS disagrees with the truncation count");
    s.gaps.push_back(g);
  }
}

double ids_sturm(double E, double lambda, const AlphaSpec& alpha,
                 int theta_grid, int M) {
  if (M < 50) throw stage_error("spectrum", "ids_sturm needs M >= 50");
  if (theta_grid < 1)
    throw stage_error("spectrum", "ids_sturm needs a theta grid");
  const double ad = alpha.value();
  std::vector<double> counts(static_cast<std::size_t>(theta_grid));
  parallel_for(counts.size(), [&](std::size_t t) {
    double th = (static_cast<double>(t) + 0.5) / theta_grid;
    int neg = 0;
    double d = 1.0;
    for (int n = -M; n <= M; ++n) {
      double v = 2.0 * lambda * std::cos(2.0 * M_PI * (th + n * ad));
      d = (v - E) - (n > -M ? 1.0 / d : 0.0);
      if (d == 0.0) d = 1e-300;  // exact zero pivot: nudge, miscount <= 1
      if (d < 0.0) ++neg;
    }
    counts[t] = static_cast<double>(neg) / (2.0 * M + 1.0);
  });
  return pairwise_sum(counts) / theta_grid;
}

namespace {

double dist_pt(double x, const std::vector<Band>& b) {
  double best = 1e300;
  for (const auto& iv : b) {
    double d = x < iv.lo ? iv.lo - x : (x > iv.hi ? x - iv.hi : 0.0);
    best = std::min(best, d);
  }
  return best;
}

// directed Hausdorff distance: d(., B) restricted to an interval union peaks
// at interval endpoints or at midpoints of B-gaps lying inside A
double directed(const std::vector<Band>& a, const std::vector<Band>& b) {
  double best = 0.0;
  for (const auto& iv : a) {
    best = std::max(best, dist_pt(iv.lo, b));
    best = std::max(best, dist_pt(iv.hi, b));
  }
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    double mid = 0.5 * (b[i].hi + b[i + 1].lo);
    for (const auto& iv : a)
      if (mid >= iv.lo && mid <= iv.hi)
        best = std::max(best, dist_pt(mid, b));
  }
  return best;
}

}  // namespace

double hausdorff_distance(const std::vector<Band>& s1,
                          const std::vector<Band>& s2) {
  if (s1.empty() || s2.empty())
    throw stage_error("spectrum", "hausdorff distance of an empty set");
  return std::max(directed(s1, s2), directed(s2, s1));
}

double hausdorff_distance(const Spectrum& s1, const Spectrum& s2) {
  return hausdorff_distance(s1.bands, s2.bands);
}

double lebesgue_measure(const Spectrum& s) {
  double total = 0.0;
  for (const auto& b : s.bands) total += b.hi - b.lo;
  return total;
}

std::vector<Band> scaled_bands(const std::vector<Band>& b, double factor) {
  if (factor <= 0.0)
    throw stage_error("spectrum", "band scaling wants a positive factor");
  std::vector<Band> out = b;
  for (auto& iv : out) {
    iv.lo *= factor;
    iv.hi *= factor;
  }
  return out;
}

}  // namespace gaplab
