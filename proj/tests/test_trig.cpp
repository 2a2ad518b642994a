#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gaplab/trig.hpp"
#include "gaplab/util.hpp"

using namespace gaplab;

namespace {

// independent quadratic-time DFT oracle (no shared code with dft/fft)
std::vector<cplx> oracle_dft(const std::vector<cplx>& a) {
  const std::size_t n = a.size();
  std::vector<cplx> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    cplx acc(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double ang = -2.0 * M_PI * double(j) * double(m) / double(n);
      acc += a[j] * cplx(std::cos(ang), std::sin(ang));
    }
    out[m] = acc;
  }
  return out;
}

// term-by-term series evaluation oracle
cplx oracle_eval(const TrigSeries& s, cplx x) {
  cplx acc(0.0);
  for (int k = -s.nmax; k <= s.nmax; ++k)
    acc += s.at(k) * std::exp(cplx(0.0, 2.0 * M_PI * k / s.period) * x);
  return acc;
}

TrigSeries random_series(int per, int nmax, unsigned long long seed) {
  auto rng = rng_stream(seed, 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TrigSeries s(per, nmax);
  for (int k = -nmax; k <= nmax; ++k) s.set(k, cplx(u(rng), u(rng)));
  return s;
}

}  // namespace

TEST_CASE("fft matches the direct dft oracle") {
  for (std::size_t n : {8u, 64u, 256u}) {
    auto rng = rng_stream(11, n);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> a(n);
    for (auto& v : a) v = cplx(u(rng), u(rng));
    auto want = oracle_dft(a);
    auto got = a;
    fft_inplace(got, false);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(got[i] - want[i]) < 1e-10);
    // inverse roundtrip
    fft_inplace(got, true);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - a[i]) < 1e-12);
  }
  // non power of two goes through the naive path
  std::vector<cplx> b(12);
  auto rng = rng_stream(12, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : b) v = cplx(u(rng), u(rng));
  auto want = oracle_dft(b);
  auto got = dft(b, false);
  for (std::size_t i = 0; i < b.size(); ++i)
    CHECK(std::abs(got[i] - want[i]) < 1e-10);
  auto back = dft(got, true);
  for (std::size_t i = 0; i < b.size(); ++i)
    CHECK(std::abs(back[i] - b[i]) < 1e-12);
}

TEST_CASE("from_grid recovers exact coefficients") {
  for (int per : {1, 2}) {
    TrigSeries s = random_series(per, 5, 21 + per);
    std::vector<cplx> samples(16);
    for (int j = 0; j < 16; ++j)
      samples[j] = oracle_eval(s, cplx(double(j) * per / 16.0, 0.0));
    TrigSeries r = TrigSeries::from_grid(per, samples);
    CHECK(r.tail < 1e-24);
    for (int k = -5; k <= 5; ++k) CHECK(std::abs(r.at(k) - s.at(k)) < 1e-13);
    for (int k = 6; k <= r.nmax; ++k) {
      CHECK(std::abs(r.at(k)) < 1e-13);
      CHECK(std::abs(r.at(-k)) < 1e-13);
    }
  }
  // under-resolved grid reports tail energy
  TrigSeries s = random_series(1, 6, 77);
  std::vector<cplx> samples(8);
  for (int j = 0; j < 8; ++j)
    samples[j] = oracle_eval(s, cplx(double(j) / 8.0, 0.0));
  TrigSeries r = TrigSeries::from_grid(1, samples, 2);
  CHECK(r.tail > 1e-6);
}

TEST_CASE("evaluation agrees with the term sum at complex arguments") {
  for (int per : {1, 2}) {
    TrigSeries s = random_series(per, 9, 5 + per);
    for (cplx x : {cplx(0.3, 0.1), cplx(-1.7, -0.25), cplx(0.0, 0.4)}) {
      cplx want = oracle_eval(s, x);
      CHECK(std::abs(s.eval(x) - want) <= 1e-12 * (1.0 + std::abs(want)));
    }
    // periodicity f(x + period) = f(x)
    cplx x(0.37, 0.05);
    CHECK(std::abs(s.eval(x + cplx(per, 0)) - s.eval(x)) < 1e-11);
  }
}

TEST_CASE("algebra: products, shifts, conjugation") {
  TrigSeries f = random_series(1, 4, 31);
  TrigSeries g = random_series(1, 7, 32);
  TrigSeries h = random_series(2, 5, 33);
  for (double x : {0.0, 0.21, 0.77}) {
    CHECK(std::abs((f * g).eval(x) - f.eval(x) * g.eval(x)) < 1e-12);
    CHECK(std::abs((f + g).eval(x) - (f.eval(x) + g.eval(x))) < 1e-13);
    // mixed period: period-1 factor is periodic on R/2Z too
    CHECK(std::abs((f * h).eval(x) - f.eval(x) * h.eval(x)) < 1e-12);
    CHECK((f * h).period == 2);
    CHECK(std::abs(f.shifted(0.3).eval(x) - f.eval(x + 0.3)) < 1e-12);
  }
  cplx z(0.4, 0.13);
  CHECK(std::abs(f.conjugated().eval(z) -
                 std::conj(f.eval(std::conj(z)))) < 1e-12);
}

TEST_CASE("reality handling") {
  TrigSeries f = random_series(1, 6, 41);
  CHECK(f.reality_error() > 1e-3);  // random complex data is not real
  TrigSeries g = f;
  g.make_real();
  CHECK(g.reality_error() < 1e-15);
  for (double x : {0.11, 0.63}) CHECK(std::abs(std::imag(g.eval(x))) < 1e-14);
  // make_real is the identity on an already-real series
  TrigSeries h = g;
  h.make_real();
  for (int k = -6; k <= 6; ++k) CHECK(std::abs(h.at(k) - g.at(k)) < 1e-16);
}

TEST_CASE("strip bound dominates the complexified sup") {
  TrigSeries f = random_series(1, 8, 51);
  for (double eps : {0.02, 0.1}) {
    double bound = f.strip_bound(eps);
    double seen = 0.0;
    for (int j = 0; j < 64; ++j)
      seen = std::max(seen, std::abs(f.eval(cplx(j / 64.0, eps))));
    CHECK(seen <= bound * (1.0 + 1e-12));
    // single mode: bound is attained up to rounding
    TrigSeries m(1, 3);
    m.set(3, cplx(0.7, 0.1));
    CHECK(std::abs(m.eval(cplx(0.0, -eps))) ==
          doctest::Approx(m.strip_bound(eps)).epsilon(1e-12));
  }
}

TEST_CASE("decay fit recovers a synthetic rate") {
  auto rng = rng_stream(61, 0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
  TrigSeries f(1, 30);
  for (int k = -30; k <= 30; ++k)
    f.set(k, std::polar(std::exp(-0.37 * std::abs(k)), u(rng)));
  CHECK(f.decay_rate() == doctest::Approx(0.37).epsilon(1e-9));
  TrigSeries g(2, 20);
  for (int k = -20; k <= 20; ++k)
    g.set(k, std::polar(std::exp(-0.8 * std::abs(k)), u(rng)));
  CHECK(g.decay_rate() == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("trim drops numerically dead wings") {
  TrigSeries f(1, 10);
  f.set(0, 1.0);
  f.set(2, cplx(0.0, 0.5));
  f.set(9, cplx(1e-19, 0.0));
  f.trim();
  CHECK(f.nmax == 2);
  CHECK(std::abs(f.at(2) - cplx(0.0, 0.5)) == 0.0);
}

TEST_CASE("rotation path matrices") {
  // R_{2 pi (t + k x / 2)} on R/2Z: entries carry modes at exactly +-k
  for (int k : {0, 1, 3, -2}) {
    TrigMat r = TrigMat::rotation_path(0.15, k, 2);
    CHECK(r.reality_error() < 1e-15);
    for (double x : {0.0, 0.3, 1.7}) {
      Mat2d want = rot2pi(0.15 + 0.5 * k * x);
      Mat2d got = r.eval_real(x);
      CHECK(std::abs(got.a - want.a) < 1e-14);
      CHECK(std::abs(got.b - want.b) < 1e-14);
      CHECK(std::abs(got.c - want.c) < 1e-14);
      CHECK(std::abs(got.d - want.d) < 1e-14);
    }
    // det identically 1
    TrigSeries det = r.det_series();
    CHECK(std::abs(det.at(0) - cplx(1.0)) < 1e-14);
    det.set(0, det.at(0) - cplx(1.0));
    CHECK(det.norm1() < 1e-13);
  }
  // even winding also representable on R/Z
  TrigMat r1 = TrigMat::rotation_path(0.4, 4, 1);
  for (double x : {0.12, 0.8}) {
    Mat2d want = rot2pi(0.4 + 2.0 * x);
    CHECK(std::abs(r1.eval_real(x).a - want.a) < 1e-14);
    CHECK(std::abs(r1.eval_real(x).c - want.c) < 1e-14);
  }
}

TEST_CASE("matrix product and grid projection") {
  TrigMat a = TrigMat::rotation_path(0.1, 2, 2);
  TrigMat b = TrigMat::rotation_path(0.23, 3, 2);
  TrigMat ab = a * b;
  for (double x : {0.0, 0.41, 1.3}) {
    Mat2c want = a.eval(cplx(x, 0)) * b.eval(cplx(x, 0));
    Mat2c got = ab.eval(cplx(x, 0));
    CHECK((got - want).fro() < 1e-13);
  }
  // projection of a closed-form sampler reproduces the series
  TrigMat p = project_grid(2, 64, 8, [&](double x) { return a.eval(cplx(x, 0)); });
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(p.e[i][j].tail < 1e-24);
      for (int k = -3; k <= 3; ++k)
        CHECK(std::abs(p.e[i][j].at(k) - a.e[i][j].at(k)) < 1e-14);
    }
}
