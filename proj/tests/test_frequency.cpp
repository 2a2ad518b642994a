#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gaplab/frequency.hpp"
#include "gaplab/util.hpp"

using namespace gaplab;

// ---------------------------------------------------------------- oracles

// distance to nearest integer, plain double arithmetic
static double odist(double x) {
  double f = x - std::floor(x);
  return f <= 0.5 ? f : 1.0 - f;
}

// resonance scan re-implemented from the definition with doubles only
static std::vector<long long> brute_resonances(double alpha, double theta,
                                               double eps0, long long K) {
  std::vector<long long> out{0};
  double run_min = odist(2 * theta);
  for (long long k = 1; k <= K; ++k) {
    double dp = odist(2 * theta - k * alpha);
    double dm = odist(2 * theta + k * alpha);
    double lvl = std::min({run_min, dp, dm});
    double thr = std::exp(-eps0 * k);
    if (dp <= lvl && dp <= thr) out.push_back(k);
    if (dm <= lvl && dm <= thr) out.push_back(-k);
    run_min = lvl;
  }
  return out;
}

static const double kGolden = 0.61803398874989484820458683436564;  // (sqrt5-1)/2

TEST_CASE("golden convergents are Fibonacci numbers") {
  auto g = golden_frequency(40);
  // independent recurrence
  std::vector<long long> fib{1, 1};
  while (fib.size() < 42) fib.push_back(fib.end()[-1] + fib.end()[-2]);
  const auto& q = g.qden();
  const auto& p = g.pnum();
  REQUIRE(q.size() == 41);
  for (std::size_t n = 1; n <= 40; ++n) {
    CHECK(q[n] == fib[n]);      // q_n = F_{n+1} with F_1=F_2=1
    CHECK(p[n] == q[n - 1]);    // golden self-similarity
  }
  CHECK(g.value() == doctest::Approx(kGolden).epsilon(1e-15));
}

TEST_CASE("two-sided best-approximation bound") {
  // 1/(2 q_{n+1}) <= ||q_n alpha|| <= 1/q_{n+1}
  auto check = [](const IrrationalFrequency& f, std::size_t nmax) {
    const auto& q = f.qden();
    for (std::size_t n = 1; n <= nmax; ++n) {
      long long qn = q[n].convert_to<long long>();
      double qn1 = big_ratio(q[n + 1], 1);
      double d = torus_distance(f, qn).value;
      CHECK(d >= 1.0 / (2.0 * qn1) * (1 - 1e-12));
      CHECK(d <= 1.0 / qn1 * (1 + 1e-12));
    }
  };
  check(golden_frequency(40), 20);
  check(build_frequency(std::vector<long long>(30, 2)), 15);  // sqrt2 - 1
  check(build_frequency(std::vector<long long>{2, 7, 1, 4, 1, 1, 8, 3, 9, 2,
                                               1, 1, 5, 2, 6, 1, 3, 1, 1, 2}),
        10);
}

TEST_CASE("golden torus distances match closed forms") {
  auto g = golden_frequency(40);
  // ||alpha|| = (3-sqrt5)/2, ||2 alpha|| = sqrt5-2, ||3 alpha|| = (5-sqrt5)/2-1
  CHECK(torus_distance(g, 1).value ==
        doctest::Approx(0.38196601125010515180).epsilon(1e-14));
  CHECK(torus_distance(g, 2).value ==
        doctest::Approx(0.23606797749978969641).epsilon(1e-14));
  CHECK(torus_distance(g, 3).value ==
        doctest::Approx(0.14589803375031545539).epsilon(1e-14));
  // against the double oracle for a spread of k
  for (long long k : {5, 13, 100, 987, 2000})
    CHECK(torus_distance(g, k).value ==
          doctest::Approx(odist(k * kGolden)).epsilon(1e-9));
  // error bound is certified and small at this depth
  CHECK(torus_distance(g, 2000).err < std::ldexp(1.0, -30));
}

TEST_CASE("certified digit extraction") {
  SUBCASE("sqrt2 - 1 gives all 2s, truncated") {
    auto r = build_frequency(std::sqrt(2.0) - 1.0, 64);
    REQUIRE(r.freq.has_value());
    CHECK(r.freq->truncated());
    CHECK(r.freq->depth() >= 12);
    for (const auto& d : r.freq->digits()) CHECK(d == 2);
  }
  SUBCASE("terminating expansions give a rational verdict") {
    auto r = build_frequency(1.0 / 3.0);
    CHECK(r.rational);
    CHECK(r.rat_p == 1);
    CHECK(r.rat_q == 3);
    auto r2 = build_frequency(0.75);
    CHECK(r2.rational);
    CHECK(r2.rat_p == 3);
    CHECK(r2.rat_q == 4);
    auto r3 = build_frequency(2.0 / 7.0);
    CHECK(r3.rational);
    CHECK(r3.rat_p == 2);
    CHECK(r3.rat_q == 7);
  }
  SUBCASE("golden sample reproduces unit digits") {
    auto r = build_frequency(kGolden, 64);
    REQUIRE(r.freq.has_value());
    CHECK(r.freq->depth() >= 12);
    for (const auto& d : r.freq->digits()) CHECK(d == 1);
  }
}

TEST_CASE("beta estimates") {
  CHECK(beta_estimate(golden_frequency(30), 10) <= 0.01);
  CHECK(beta_estimate(build_frequency(std::vector<long long>(25, 2)), 10) <=
        0.01);
  CHECK_THROWS_AS(beta_estimate(golden_frequency(8), 10), stage_error);

  SUBCASE("synthetic frequencies hit their target") {
    auto f1 = synth_beta_frequency(0.5, 12, 7);
    double b1 = beta_estimate(f1, 10);
    CHECK(b1 >= 0.45);
    CHECK(b1 <= 0.55);
    auto f2 = synth_beta_frequency(1.0, 12, 7);
    double b2 = beta_estimate(f2, 10);
    CHECK(b2 >= 0.9);
    CHECK(b2 <= 1.1);
  }
  SUBCASE("determinism and degenerate target") {
    auto a = synth_beta_frequency(0.3, 14, 42);
    auto b = synth_beta_frequency(0.3, 14, 42);
    CHECK(a.digits() == b.digits());
    auto tiny = synth_beta_frequency(1e-9, 20, 3);
    for (const auto& d : tiny.digits()) CHECK(d <= 3);  // bounded digits
  }
  SUBCASE("strict mode reports the feasible prefix") {
    SynthOptions o;
    o.strict = true;
    o.max_digit_bits = 4096;
    CHECK_THROWS_WITH_AS(synth_beta_frequency(0.5, 12, 7, o),
                         doctest::Contains("max feasible n_digits"),
                         stage_error);
  }
}

TEST_CASE("smallest divisor picks the best denominator") {
  auto g = golden_frequency(40);
  auto rep = smallest_divisor(g, 100);
  CHECK(rep.argmin == 89);  // largest Fibonacci <= 100
  double best = 1.0;
  for (long long j = 1; j <= 100; ++j) best = std::min(best, odist(j * kGolden));
  CHECK(rep.value == doctest::Approx(best).epsilon(1e-9));
  CHECK(rep.value >= rep.floor_3beta * 1e-6);  // floors are reference-only
}

TEST_CASE("resonances: exact lattice phase") {
  auto g = golden_frequency(40);
  auto th = PhasePoint::lattice(1, 0, g);  // theta = alpha/2
  auto rep = resonances(g, th, 0.05, 50);
  REQUIRE(rep.resonances.size() == 2);
  CHECK(rep.resonances[0].k == 0);
  CHECK(rep.resonances[1].k == 1);
  CHECK(rep.resonances[1].dist == 0.0);
  CHECK_FALSE(rep.truncated);  // dist 0 is provably minimal forever after
}

TEST_CASE("resonances agree with the double brute force") {
  auto g = golden_frequency(40);
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uth(0.0, 1.0), ue(0.01, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    double theta = uth(rng), eps0 = ue(rng);
    auto rep = resonances(g, PhasePoint::real(theta), eps0, 500);
    auto brute = brute_resonances(kGolden, theta, eps0, 500);
    REQUIRE(rep.resonances.size() == brute.size());
    for (std::size_t i = 0; i < brute.size(); ++i)
      CHECK(rep.resonances[i].k == brute[i]);
    CHECK(rep.truncated);
    // ordering: |k| nondecreasing, positive first on ties
    for (std::size_t i = 1; i < rep.resonances.size(); ++i) {
      long long a = rep.resonances[i - 1].k, b = rep.resonances[i].k;
      CHECK(std::llabs(a) <= std::llabs(b));
      if (std::llabs(a) == std::llabs(b)) CHECK(a > b);
    }
  }
}

TEST_CASE("precision exhaustion is reported, not silently degraded") {
  auto shallow = golden_frequency(6);
  CHECK_THROWS_WITH_AS(torus_distance(shallow, 1000000),
                       doctest::Contains("precision exhausted"), stage_error);
}

TEST_CASE("alpha handle phase stepping") {
  auto r = AlphaSpec::make_rational(15, 24);  // reduces to 5/8
  CHECK(r.p == 5);
  CHECK(r.q == 8);
  CHECK(r.phase_after(0.1, 3) == doctest::Approx(0.975).epsilon(1e-15));
  auto g = AlphaSpec::make_irrational(golden_frequency(40));
  for (long long k : {1LL, 100LL, 10000LL})
    CHECK(g.phase_after(0.25, k) ==
          doctest::Approx(std::fmod(0.25 + k * kGolden, 1.0)).epsilon(1e-8));
}
