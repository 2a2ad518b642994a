#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "gaplab/cocycle.hpp"
#include "gaplab/rational_spectrum.hpp"

using namespace gaplab;

namespace {

// ---- independent oracle: averaged eigenvalue counts of the truncated
// operator, no transfer matrices involved ----------------------------------

double oracle_count_avg(double E, double lambda, double alpha, int tg, int M) {
  double acc = 0.0;
  for (int t = 0; t < tg; ++t) {
    double th = (t + 0.5) / tg;
    int neg = 0;
    double d = 1.0;
    for (int n = -M; n <= M; ++n) {
      double v = 2.0 * lambda * std::cos(2.0 * M_PI * (th + n * alpha));
      d = (v - E) - (n > -M ? 1.0 / d : 0.0);
      if (d == 0.0) d = 1e-300;
      if (d < 0.0) ++neg;
    }
    acc += static_cast<double>(neg) / (2 * M + 1);
  }
  return acc / tg;
}

// energy where the averaged counting function crosses a level; reliable to a
// few 1e-3 at sqrt-type band edges, useless at tangencies
double oracle_edge(double level, double lambda, double alpha, int tg, int M) {
  double lo = -3.0 - 2.0 * std::fabs(lambda), hi = -lo;
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    (oracle_count_avg(mid, lambda, alpha, tg, M) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// brute-force discriminant: plain ordered 2x2 product, no library code
double oracle_disc(double E, double theta, double lambda, long long p,
                   long long q) {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
  for (long long k = 0; k < q; ++k) {
    double x = theta + static_cast<double>(k * p) / static_cast<double>(q);
    double v = E - 2.0 * lambda * std::cos(2.0 * M_PI * x);
    double na = v * a - c, nb = v * b - d;
    c = a;
    d = b;
    a = na;
    b = nb;
  }
  return a + d;
}

}  // namespace

TEST_CASE("discriminant closed forms and theta support") {
  SUBCASE("q = 1 is a single factor") {
    CHECK(discriminant(0.73, 0.31, 0.0, 0, 1) == doctest::Approx(0.73));
    for (double th : {0.0, 0.21, 0.77}) {
      double want = -0.4 - 2.0 * 0.6 * std::cos(2.0 * M_PI * th);
      CHECK(discriminant(-0.4, th, 0.6, 0, 1) == doctest::Approx(want));
    }
  }
  SUBCASE("matches the brute product") {
    for (double E : {-1.3, 0.2, 2.7})
      for (double th : {0.0, 0.4}) {
        CHECK(discriminant(E, th, 0.5, 3, 5) ==
              doctest::Approx(oracle_disc(E, th, 0.5, 3, 5)).epsilon(1e-12));
      }
  }
  SUBCASE("theta-DFT is supported on {0, q} with cos amplitude 2 lambda^q") {
    const long long p = 3, q = 5;
    const double lambda = 0.5, E = 1.1;
    const int m = 40;
    std::vector<std::complex<double>> bins(m, 0.0);
    for (int j = 0; j < m; ++j) {
      double v = discriminant(E, static_cast<double>(j) / m, lambda, p, q);
      for (int k = 0; k < m; ++k)
        bins[k] += v * std::polar(1.0, -2.0 * M_PI * j * k / m);
    }
    double top = 0.0;
    for (auto& z : bins) top = std::max(top, std::abs(z));
    for (int k = 1; k < m; ++k) {
      if (k == q || k == m - q) continue;
      CHECK(std::abs(bins[k]) <= 1e-9 * top);
    }
    double amp = 2.0 * std::abs(bins[q]) / m;
    CHECK(amp == doctest::Approx(2.0 * std::pow(lambda, q)).epsilon(1e-9));
  }
}

TEST_CASE("rational spectra match closed forms") {
  SUBCASE("q = 1: one band [-2-2l, 2+2l]") {
    Spectrum s = spectrum_rational(0.7, 0, 1);
    REQUIRE(s.bands.size() == 1);
    CHECK(s.bands[0].lo == doctest::Approx(-3.4).epsilon(1e-12));
    CHECK(s.bands[0].hi == doctest::Approx(3.4).epsilon(1e-12));
    CHECK(std::abs(s.bands[0].res_lo) < 1e-9);
    CHECK(std::abs(s.bands[0].res_hi) < 1e-9);
  }
  SUBCASE("q = 2: bands +-2 sqrt(1+l^2) touching at 0") {
    for (double lambda : {0.5, 1.0}) {
      Spectrum s = spectrum_rational(lambda, 1, 2);
      REQUIRE(s.bands.size() == 2);
      double ex = 2.0 * std::sqrt(1.0 + lambda * lambda);
      CHECK(s.bands[0].lo == doctest::Approx(-ex).epsilon(1e-10));
      CHECK(std::abs(s.bands[0].hi) < 1e-6);
      CHECK(std::abs(s.bands[1].lo) < 1e-6);
      CHECK(s.bands[1].hi == doctest::Approx(ex).epsilon(1e-10));
      gap_labels(s);
      REQUIRE(s.gaps.size() == 1);
      CHECK_FALSE(s.gaps[0].open);  // central gap closed at p/q = 1/2
    }
  }
  SUBCASE("bands stay inside the operator norm bound") {
    for (auto pq : {std::pair<long long, long long>{1, 3}, {2, 7}, {5, 8}}) {
      Spectrum s = spectrum_rational(0.8, pq.first, pq.second);
      REQUIRE(s.bands.size() == static_cast<std::size_t>(pq.second));
      for (std::size_t i = 0; i < s.bands.size(); ++i) {
        CHECK(s.bands[i].lo <= s.bands[i].hi);
        CHECK(s.bands[i].lo >= -2.0 - 2.0 * 0.8 - 1e-9);
        CHECK(s.bands[i].hi <= 2.0 + 2.0 * 0.8 + 1e-9);
        if (i > 0) CHECK(s.bands[i - 1].hi <= s.bands[i].lo + 1e-9);
        CHECK(std::abs(s.bands[i].res_lo) < 1e-8);
        CHECK(std::abs(s.bands[i].res_hi) < 1e-8);
      }
    }
  }
  SUBCASE("q = 5 edges agree with the truncated-operator oracle") {
    const double lambda = 0.5, alpha = 3.0 / 5.0;
    Spectrum s = spectrum_rational(lambda, 3, 5);
    REQUIRE(s.bands.size() == 5);
    const int tg = 48, M = 1500;
    const double pad = 0.002;
    for (int j = 0; j < 5; ++j) {
      double olo = oracle_edge(j / 5.0 + pad, lambda, alpha, tg, M);
      double ohi = oracle_edge((j + 1) / 5.0 - pad, lambda, alpha, tg, M);
      CHECK(std::abs(s.bands[j].lo - olo) < 2e-2);
      CHECK(std::abs(s.bands[j].hi - ohi) < 2e-2);
    }
  }
  SUBCASE("edges move continuously in lambda") {
    Spectrum s1 = spectrum_rational(0.5, 3, 5);
    Spectrum s2 = spectrum_rational(0.5001, 3, 5);
    for (int j = 0; j < 5; ++j) {
      CHECK(std::abs(s1.bands[j].lo - s2.bands[j].lo) <= 1e-2);
      CHECK(std::abs(s1.bands[j].hi - s2.bands[j].hi) <= 1e-2);
    }
  }
}

TEST_CASE("gap labels and IDS values") {
  SUBCASE("congruence pick: q = 5, p = 2, j = 1 gives l = -2") {
    Spectrum s = spectrum_rational(0.5, 2, 5);
    gap_labels(s);
    REQUIRE(s.gaps.size() == 4);
    CHECK(s.gaps[0].j == 1);
    CHECK(s.gaps[0].label == -2);
    for (const auto& g : s.gaps) {
      long long r = ((g.label * 2 - g.j) % 5 + 5) % 5;
      CHECK(r == 0);
      CHECK(std::llabs(g.label) * 2 <= 5);
    }
  }
  SUBCASE("ids values run over {1/5..4/5} and match the Sturm counts") {
    Spectrum s = spectrum_rational(0.5, 3, 5);
    gap_labels(s);
    REQUIRE(s.gaps.size() == 4);
    AlphaSpec a = AlphaSpec::make_rational(3, 5);
    for (int j = 1; j <= 4; ++j) {
      const GapReport& g = s.gaps[j - 1];
      CHECK(g.j == j);
      CHECK(g.open);
      double mid = 0.5 * (g.lo + g.hi);
      double n = ids_sturm(mid, 0.5, a, 16, 1000);
      CHECK(std::abs(n - j / 5.0) <= 2.0 / 1000.0 + 1e-3);
    }
  }
}

TEST_CASE("ids_sturm basics") {
  AlphaSpec a = AlphaSpec::make_rational(3, 5);
  SUBCASE("saturates to 0 and 1 outside the norm bound") {
    CHECK(ids_sturm(-3.5, 0.5, a, 4, 200) == 0.0);
    CHECK(ids_sturm(3.5, 0.5, a, 4, 200) == 1.0);
  }
  SUBCASE("nondecreasing in E") {
    double prev = -1.0;
    for (double E = -3.2; E <= 3.2; E += 0.4) {
      double n = ids_sturm(E, 0.5, a, 8, 300);
      CHECK(n >= prev - 1e-12);
      prev = n;
    }
  }
  SUBCASE("irrational frequency accepted") {
    AlphaSpec g = AlphaSpec::make_irrational(golden_frequency(40));
    double n = ids_sturm(0.0, 0.5, g, 8, 400);
    CHECK(n == doctest::Approx(0.5).epsilon(2e-2));  // E=0 is the median
  }
}

TEST_CASE("hausdorff distance and measure") {
  Spectrum s = spectrum_rational(1.0, 5, 8);
  SUBCASE("identity and shift") {
    CHECK(hausdorff_distance(s, s) == 0.0);
    std::vector<Band> shifted = s.bands;
    for (auto& b : shifted) {
      b.lo += 0.013;
      b.hi += 0.013;
    }
    CHECK(hausdorff_distance(s.bands, shifted) ==
          doctest::Approx(0.013).epsilon(1e-12));
  }
  SUBCASE("neighbouring approximants obey the 1/2-Hoelder bound") {
    Spectrum t = spectrum_rational(1.0, 8, 13);
    double h = hausdorff_distance(s, t);
    double da = std::abs(5.0 / 8.0 - 8.0 / 13.0);
    CHECK(h > 0.0);
    CHECK(h <= 10.0 * std::sqrt(da));
  }
  SUBCASE("Aubry duality at rational alpha") {
    for (double lambda : {0.3, 0.5, 2.0}) {
      Spectrum sl = spectrum_rational(lambda, 3, 5);
      Spectrum sd = spectrum_rational(1.0 / lambda, 3, 5);
      double h = hausdorff_distance(sd.bands,
                                    scaled_bands(sl.bands, 1.0 / lambda));
      CHECK(h <= 1e-6);
    }
  }
  SUBCASE("lebesgue measure of the q = 2 spectrum") {
    Spectrum t = spectrum_rational(0.5, 1, 2);
    CHECK(lebesgue_measure(t) ==
          doctest::Approx(4.0 * std::sqrt(1.25)).epsilon(1e-10));
  }
}

TEST_CASE("hyperbolic in gaps, not in bands") {
  Spectrum s = spectrum_rational(0.5, 3, 5);
  gap_labels(s);
  AlphaSpec a = AlphaSpec::make_rational(3, 5);
  SUBCASE("every open gap midpoint is uniformly hyperbolic") {
    for (const auto& g : s.gaps) {
      CocycleSpec c;
      c.lambda = 0.5;
      c.E = 0.5 * (g.lo + g.hi);
      c.alpha = a;
      auto r = uniform_hyperbolicity_test(c, 512, 1.01);
      CHECK(r.verdict == "true");
    }
  }
  SUBCASE("band midpoints are not") {
    for (const auto& b : s.bands) {
      CocycleSpec c;
      c.lambda = 0.5;
      c.E = 0.5 * (b.lo + b.hi);
      c.alpha = a;
      auto r = uniform_hyperbolicity_test(c, 512, 1.01);
      CHECK(r.verdict == "false");
    }
  }
}
