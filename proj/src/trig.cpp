#include "gaplab/trig.hpp"

#include <algorithm>
#include <cmath>

namespace gaplab {

void fft_inplace(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw stage_error("trig", "fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    cplx wl = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        cplx u = a[i + j], v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    double inv = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv;
  }
}

std::vector<cplx> dft(const std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0) return {};
  if ((n & (n - 1)) == 0) {
    std::vector<cplx> out = a;
    fft_inplace(out, inverse);
    return out;
  }
  std::vector<cplx> out(n, cplx(0.0));
  double sgn = inverse ? 1.0 : -1.0;
  for (std::size_t m = 0; m < n; ++m) {
    cplx acc(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double ang = sgn * 2.0 * M_PI * static_cast<double>(m * j % n) /
                   static_cast<double>(n);
      acc += a[j] * std::polar(1.0, ang);
    }
    out[m] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

TrigSeries TrigSeries::constant(cplx v, int per) {
  TrigSeries s(per, 0);
  s.c[0] = v;
  return s;
}

TrigSeries TrigSeries::from_grid(int per, const std::vector<cplx>& samples,
                                 int keep, double scale_floor) {
  const int m = static_cast<int>(samples.size());
  if (m < 2) throw stage_error("trig", "from_grid needs at least 2 samples");
  std::vector<cplx> f = dft(samples, false);
  int kee = (m - 1) / 2;
  if (keep >= 0) kee = std::min(keep, kee);
  TrigSeries s(per, kee);
  double total = 0.0, kept = 0.0;
  for (int idx = 0; idx < m; ++idx) {
    int k = idx <= (m - 1) / 2 ? idx : idx - m;
    double e = std::norm(f[idx]);
    total += e;
    if (std::abs(k) <= kee) {
      s.c[k + kee] = f[idx] / static_cast<double>(m);
      kept += e;
    }
  }
  // DFT bins scale with m, so an amplitude floor S contributes (m*S)^2 energy
  double floor2 = scale_floor * m;
  floor2 *= floor2;
  double denom = std::max(total, floor2);
  s.tail = denom > 0.0 ? (total - kept) / denom : 0.0;
  return s;
}

void TrigSeries::set(int k, cplx v) {
  int need = std::abs(k);
  if (need > nmax) {
    std::vector<cplx> grown(2 * need + 1, cplx(0.0));
    for (int j = -nmax; j <= nmax; ++j) grown[j + need] = c[j + nmax];
    c.swap(grown);
    nmax = need;
  }
  c[k + nmax] = v;
}

cplx TrigSeries::eval(cplx x) const {
  const cplx iw(0.0, 2.0 * M_PI / period);
  cplx zp = std::exp(iw * x);
  cplx zm = std::exp(-iw * x);
  cplx pos(0.0);
  for (int k = nmax; k >= 1; --k) pos = (pos + at(k)) * zp;
  cplx neg(0.0);
  for (int k = nmax; k >= 1; --k) neg = (neg + at(-k)) * zm;
  return pos + neg + at(0);
}

namespace {
// promote a period-1 series onto the period-2 lattice (index doubles)
TrigSeries widen(const TrigSeries& s) {
  TrigSeries out(2, 2 * s.nmax);
  for (int k = -s.nmax; k <= s.nmax; ++k) out.c[2 * k + out.nmax] = s.at(k);
  out.tail = s.tail;
  return out;
}
void align(TrigSeries& a, TrigSeries& b) {
  if (a.period == b.period) return;
  if (a.period == 1)
    a = widen(a);
  else if (b.period == 1)
    b = widen(b);
  else
    throw stage_error("trig", "incompatible series periods");
}
}  // namespace

TrigSeries TrigSeries::operator+(const TrigSeries& o) const {
  TrigSeries x = *this, y = o;
  align(x, y);
  TrigSeries s(x.period, std::max(x.nmax, y.nmax));
  for (int k = -s.nmax; k <= s.nmax; ++k) s.c[k + s.nmax] = x.at(k) + y.at(k);
  s.tail = std::max(x.tail, y.tail);
  return s;
}

TrigSeries TrigSeries::operator-(const TrigSeries& o) const {
  return *this + (o * cplx(-1.0));
}

TrigSeries TrigSeries::operator*(const TrigSeries& o) const {
  TrigSeries x = *this, y = o;
  align(x, y);
  TrigSeries s(x.period, x.nmax + y.nmax);
  for (int k1 = -x.nmax; k1 <= x.nmax; ++k1) {
    cplx v = x.at(k1);
    if (v == cplx(0.0)) continue;
    for (int k2 = -y.nmax; k2 <= y.nmax; ++k2)
      s.c[k1 + k2 + s.nmax] += v * y.at(k2);
  }
  s.tail = std::max(x.tail, y.tail);
  return s;
}

TrigSeries TrigSeries::operator*(cplx sc) const {
  TrigSeries s = *this;
  for (auto& v : s.c) v *= sc;
  return s;
}

TrigSeries TrigSeries::shifted(double dx) const {
  TrigSeries s = *this;
  for (int k = -nmax; k <= nmax; ++k)
    s.c[k + nmax] *= std::polar(1.0, 2.0 * M_PI * k * dx / period);
  return s;
}

TrigSeries TrigSeries::conjugated() const {
  TrigSeries s = *this;
  for (int k = -nmax; k <= nmax; ++k) s.c[k + nmax] = std::conj(at(-k));
  return s;
}

double TrigSeries::reality_error() const {
  double m = 0.0;
  for (int k = 0; k <= nmax; ++k)
    m = std::max(m, std::abs(at(-k) - std::conj(at(k))));
  return m;
}

void TrigSeries::make_real() {
  for (int k = 0; k <= nmax; ++k) {
    cplx s = 0.5 * (at(k) + std::conj(at(-k)));
    c[k + nmax] = s;
    c[-k + nmax] = std::conj(s);
  }
}

double TrigSeries::norm1() const {
  double s = 0.0;
  for (const auto& v : c) s += std::abs(v);
  return s;
}

double TrigSeries::norm2sq() const {
  double s = 0.0;
  for (const auto& v : c) s += std::norm(v);
  return s;
}

double TrigSeries::strip_bound(double eps) const {
  double s = 0.0;
  for (int k = -nmax; k <= nmax; ++k)
    s += std::abs(at(k)) * std::exp(2.0 * M_PI * std::abs(k) * eps / period);
  return s;
}

double TrigSeries::decay_rate() const {
  // envelope fit over |k|: ln max(|c_k|,|c_-k|) ~ C - r |k|
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = 1; k <= nmax; ++k) {
    double a = std::max(std::abs(at(k)), std::abs(at(-k)));
    if (a < 1e-280) continue;
    double xk = k, yk = std::log(a);
    sx += xk;
    sy += yk;
    sxx += xk * xk;
    sxy += xk * yk;
    ++n;
  }
  if (n < 3) return 0.0;
  double den = n * sxx - sx * sx;
  if (den <= 0) return 0.0;
  return -(n * sxy - sx * sy) / den;
}

double TrigSeries::sup_grid(int m) const {
  double best = 0.0;
  for (int j = 0; j < m; ++j)
    best = std::max(best,
                    std::abs(eval(static_cast<double>(j) * period / m)));
  return best;
}

void TrigSeries::trim(double eps) {
  double top = 0.0;
  for (const auto& v : c) top = std::max(top, std::abs(v));
  double cut = eps > 0.0 ? eps : top * 1e-15;
  int n = nmax;
  while (n > 0 && std::abs(at(n)) <= cut && std::abs(at(-n)) <= cut) --n;
  if (n == nmax) return;
  TrigSeries s(period, n);
  for (int k = -n; k <= n; ++k) s.c[k + n] = at(k);
  s.tail = tail;
  *this = s;
}

TrigMat TrigMat::identity(int per) {
  TrigMat m;
  m.period = per;
  m.e[0][0] = TrigSeries::constant(1.0, per);
  m.e[0][1] = TrigSeries::constant(0.0, per);
  m.e[1][0] = TrigSeries::constant(0.0, per);
  m.e[1][1] = TrigSeries::constant(1.0, per);
  return m;
}

TrigMat TrigMat::rotation_path(double t, int k, int per) {
  if (per != 2 && (k % 2) != 0)
    throw stage_error("trig", "odd half-winding needs period 2");
  int idx = per == 2 ? k : k / 2;
  cplx hp = std::polar(0.5, 2.0 * M_PI * t);  // e^{2 pi i t}/2
  cplx hm = std::conj(hp);
  // theta(x) = 2 pi t + pi k x; cos = hp e_idx + hm e_{-idx}, sin likewise
  TrigSeries cs(per, std::abs(idx)), sn(per, std::abs(idx));
  auto add = [](TrigSeries& s, int kk, cplx v) { s.set(kk, s.at(kk) + v); };
  add(cs, idx, hp);
  add(cs, -idx, hm);
  add(sn, idx, hp * cplx(0.0, -1.0));
  add(sn, -idx, hm * cplx(0.0, 1.0));
  TrigMat m;
  m.period = per;
  m.e[0][0] = cs;
  m.e[0][1] = sn * cplx(-1.0);
  m.e[1][0] = sn;
  m.e[1][1] = cs;
  return m;
}

Mat2c TrigMat::eval(cplx x) const {
  return {e[0][0].eval(x), e[0][1].eval(x), e[1][0].eval(x), e[1][1].eval(x)};
}

Mat2d TrigMat::eval_real(double x) const {
  Mat2c m = eval(cplx(x, 0.0));
  return {m.a.real(), m.b.real(), m.c.real(), m.d.real()};
}

TrigMat TrigMat::shifted(double dx) const {
  TrigMat m = *this;
  for (auto& row : m.e)
    for (auto& s : row) s = s.shifted(dx);
  return m;
}

TrigMat TrigMat::operator*(const TrigMat& o) const {
  TrigMat m;
  m.period = std::max(period, o.period);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m.e[i][j] = e[i][0] * o.e[0][j] + e[i][1] * o.e[1][j];
  return m;
}

TrigSeries TrigMat::det_series() const {
  return e[0][0] * e[1][1] - e[0][1] * e[1][0];
}

int TrigMat::degree_hint() const {
  int d = 0;
  for (const auto& row : e)
    for (const auto& s : row) d = std::max(d, s.nmax);
  return d;
}

double TrigMat::reality_error() const {
  double m = 0.0;
  for (const auto& row : e)
    for (const auto& s : row) m = std::max(m, s.reality_error());
  return m;
}

TrigSeries project_grid_scalar(int per, int grid_m, int keep,
                               const std::function<cplx(double)>& f) {
  std::vector<cplx> samples(static_cast<std::size_t>(grid_m));
  for (int j = 0; j < grid_m; ++j)
    samples[j] = f(static_cast<double>(j) * per / grid_m);
  return TrigSeries::from_grid(per, samples, keep);
}

TrigMat project_grid(int per, int grid_m, int keep,
                     const std::function<Mat2c(double)>& f) {
  std::vector<cplx> s00(grid_m), s01(grid_m), s10(grid_m), s11(grid_m);
  for (int j = 0; j < grid_m; ++j) {
    Mat2c m = f(static_cast<double>(j) * per / grid_m);
    s00[j] = m.a;
    s01[j] = m.b;
    s10[j] = m.c;
    s11[j] = m.d;
  }
  TrigMat m;
  m.period = per;
  m.e[0][0] = TrigSeries::from_grid(per, s00, keep);
  m.e[0][1] = TrigSeries::from_grid(per, s01, keep);
  m.e[1][0] = TrigSeries::from_grid(per, s10, keep);
  m.e[1][1] = TrigSeries::from_grid(per, s11, keep);
  return m;
}

}  // namespace gaplab
