#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gaplab/cocycle.hpp"
#include "gaplab/util.hpp"

using namespace gaplab;

namespace {

AlphaSpec golden_alpha(int n = 40) {
  return AlphaSpec::make_irrational(golden_frequency(n));
}

// oracle: plain unscaled double product, naive phase accumulation
Mat2d brute_transfer(const CocycleSpec& s, double x0, int n) {
  Mat2d p = Mat2d::id();
  double x = x0;
  for (int k = 0; k < n; ++k) {
    double v = s.E - 2.0 * s.lambda * std::cos(2.0 * M_PI * x);
    p = Mat2d{v, -1.0, 1.0, 0.0} * p;
    x = std::fmod(x + s.alpha.value(), 1.0);
  }
  return p;
}

// oracle: truncated Taylor series for the exponential
template <class T>
Mat2<T> taylor_exp(const Mat2<T>& m) {
  Mat2<T> acc = Mat2<T>::id(), pw = Mat2<T>::id();
  double fact = 1.0;
  for (int k = 1; k <= 40; ++k) {
    pw = pw * m;
    fact *= k;
    acc = acc + pw * T(1.0 / fact);
  }
  return acc;
}

TrigMat constant_mat(Mat2d m) {
  TrigMat t = TrigMat::identity(1);
  t.e[0][0] = TrigSeries::constant(m.a, 1);
  t.e[0][1] = TrigSeries::constant(m.b, 1);
  t.e[1][0] = TrigSeries::constant(m.c, 1);
  t.e[1][1] = TrigSeries::constant(m.d, 1);
  return t;
}

}  // namespace

TEST_CASE("matrix exponential: Pade vs Taylor oracle") {
  auto rng = rng_stream(3, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Mat2d m{u(rng), u(rng), u(rng), u(rng)};
    Mat2d want = taylor_exp(m), got = expm(m);
    CHECK((got - want).fro() < 1e-13 * std::exp(m.fro()));
    Mat2c mc{cplx(u(rng), u(rng)), cplx(u(rng), u(rng)), cplx(u(rng), u(rng)),
             cplx(u(rng), u(rng))};
    CHECK((expm(mc) - taylor_exp(mc)).fro() < 1e-12);
    // traceless exponent gives det 1
    Mat2d t{m.a, m.b, m.c, -m.a};
    CHECK(std::abs(expm(t).det() - 1.0) < 1e-12);
  }
  CHECK((expm(Mat2d{0, 0, 0, 0}) - Mat2d::id()).fro() == 0.0);
  // rotation generator
  double t = 0.7;
  Mat2d g{0.0, -t, t, 0.0};
  Mat2d want = rot2pi(t / (2.0 * M_PI));
  CHECK((expm(g) - want).fro() < 1e-14);
}

TEST_CASE("transfer products") {
  CocycleSpec s;
  s.lambda = 0.7;
  s.E = 0.3;
  s.alpha = golden_alpha();

  SUBCASE("n = 1 is the single cocycle matrix") {
    auto p = transfer_product_real(s, 0.2, 1);
    Mat2d want = amo_matrix_real(s, 0.2);
    CHECK((p.represented() - want).fro() < 1e-14);
  }
  SUBCASE("matches the unscaled oracle at n = 40") {
    for (double x0 : {0.0, 0.313, 0.77}) {
      auto p = transfer_product_real(s, x0, 40);
      Mat2d want = brute_transfer(s, x0, 40);
      double sc = want.fro();
      CHECK((p.represented() - want).fro() < 1e-9 * sc);
      CHECK(p.unit.fro() == doctest::Approx(1.0).epsilon(0.5));  // in [1/2,1)
    }
  }
  SUBCASE("determinant stays pinned over q = 8 steps and beyond") {
    auto p = transfer_product_real(s, 0.1, 8);
    CHECK(std::abs(p.det_drift()) < 1e-12);
    auto p2 = transfer_product_real(s, 0.1, 20000);
    CHECK(std::abs(p2.det_drift()) < 1e-9);
  }
  SUBCASE("constant elliptic cocycle has trace 2 cos(2 pi n rho0)") {
    CocycleSpec c;
    c.lambda = 0.0;
    c.alpha = golden_alpha();
    double rho0 = 0.2;
    c.E = 2.0 * std::cos(2.0 * M_PI * rho0);
    for (int n : {1, 5, 17, 30}) {
      auto p = transfer_product_real(c, 0.9, n);
      double want = 2.0 * std::cos(2.0 * M_PI * n * rho0);
      CHECK(p.represented().tr() == doctest::Approx(want).epsilon(1e-9));
    }
  }
  SUBCASE("complex product reduces to the real one at eps = 0") {
    auto pr = transfer_product_real(s, 0.4, 100);
    auto pc = transfer_product(s, 0.4, 100);
    CHECK(std::abs(pr.log_norm2() - pc.log_norm2()) < 1e-12);
  }
}

TEST_CASE("phase iteration stays anchored for long products") {
  AlphaSpec a = golden_alpha();
  long long k = (1LL << 21) + 17;
  double direct = frac1(0.3 + static_cast<double>(k) * a.value());
  double exact = phase_at(a, 0.3, k);
  CHECK(std::abs(std::remainder(direct - exact, 1.0)) < 1e-8);
}

TEST_CASE("lyapunov exponents") {
  double eta = std::log(2.0) / (2.0 * M_PI);

  SUBCASE("supercritical coupling pins L = ln lambda") {
    CocycleSpec s;
    s.lambda = 2.0;
    s.E = 0.0;  // E = 0 lies in the spectrum for golden alpha
    s.alpha = golden_alpha();
    auto r = lyapunov(s, 20000, 12, 5);
    CHECK(std::abs(r.mean - std::log(2.0)) < 0.02);
    CHECK(r.maxv >= r.mean);
  }
  SUBCASE("subcritical coupling has L = 0 on the spectrum") {
    CocycleSpec s;
    s.lambda = 0.5;
    s.E = 0.0;
    s.alpha = golden_alpha();
    auto r = lyapunov(s, 20000, 12, 5);
    CHECK(std::abs(r.mean) < 0.02);
  }
  SUBCASE("complexified phase: flat until eta, then linear growth") {
    CocycleSpec s;
    s.lambda = 0.5;
    s.E = 0.0;
    s.alpha = golden_alpha();
    s.im_offset = eta / 2.0;
    CHECK(std::abs(lyapunov(s, 12000, 8, 7).mean) < 0.02);
    s.im_offset = eta + 0.05;
    double want = std::log(0.5) + 2.0 * M_PI * (eta + 0.05);  // = 2 pi * 0.05
    CHECK(std::abs(lyapunov(s, 12000, 8, 7).mean - want) < 0.02);
    // evenness in eps
    s.im_offset = 0.1;
    double lp = lyapunov(s, 4000, 4, 9).mean;
    s.im_offset = -0.1;
    double lm = lyapunov(s, 4000, 4, 9).mean;
    CHECK(std::abs(lp - lm) < 1e-12);
  }
  SUBCASE("constant hyperbolic matrix") {
    CocycleSpec s;
    s.lambda = 0.0;
    s.E = 3.0;
    s.alpha = golden_alpha();
    auto r = lyapunov(s, 5000, 4, 3);
    CHECK(std::abs(r.mean - std::log((3.0 + std::sqrt(5.0)) / 2.0)) < 1e-3);
  }
}

TEST_CASE("rotation numbers") {
  SUBCASE("free cocycle: 2 cos 2 pi rho = E") {
    CocycleSpec s;
    s.lambda = 0.0;
    s.alpha = golden_alpha();
    s.E = 0.0;
    CHECK(rotation_number(s, 2000) == doctest::Approx(0.25).epsilon(1e-12));
    s.E = 2.0 * std::cos(2.0 * M_PI * 0.2);
    CHECK(rotation_number(s, 20000) == doctest::Approx(0.2).epsilon(1e-3));
  }
  SUBCASE("boundary values off the spectrum") {
    CocycleSpec s;
    s.lambda = 0.5;
    s.alpha = golden_alpha();
    s.E = -4.0;
    double lo = rotation_number(s, 10000);
    CHECK(lo == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(std::abs(ids_from_rotation(lo)) < 5e-3);
    s.E = 4.0;
    double hi = rotation_number(s, 10000);
    CHECK(hi == doctest::Approx(0.0).epsilon(2e-3));
    CHECK(ids_from_rotation(hi) == doctest::Approx(1.0).epsilon(5e-3));
  }
  SUBCASE("nonincreasing in E") {
    CocycleSpec s;
    s.lambda = 0.5;
    s.alpha = golden_alpha();
    double prev = 1.0;
    for (double e = -3.0; e <= 3.01; e += 0.6) {
      s.E = e;
      double r = rotation_number(s, 4000);
      CHECK(r <= prev + 2.0 * 5.0 / 4000.0);
      prev = r;
    }
  }
  SUBCASE("generic tracker agrees with the Schroedinger tracker mod 1/2") {
    CocycleSpec s;
    s.lambda = 0.3;
    s.E = 0.5;
    s.alpha = golden_alpha();
    double rho = rotation_number(s, 30000);
    double gen = rotation_number_generic(
        [&](double x) { return amo_matrix_real(s, x); }, s.alpha, 30000);
    double d = std::remainder(rho - gen, 0.5);
    CHECK(std::abs(d) < 1e-3);
  }
}

TEST_CASE("uniform hyperbolicity") {
  SUBCASE("large E is hyperbolic at rate about ln E") {
    CocycleSpec s;
    s.lambda = 0.5;
    s.E = 10.0;
    s.alpha = golden_alpha();
    auto r = uniform_hyperbolicity_test(s, 64, 2.0);
    CHECK(r.verdict == "true");
    CHECK(std::abs(r.rate - std::log(10.0)) < 0.15 * std::log(10.0));
  }
  SUBCASE("constant hyperbolic matrix: exact rate") {
    CocycleSpec s;
    s.lambda = 0.0;
    s.E = 3.0;
    s.alpha = golden_alpha();
    auto r = uniform_hyperbolicity_test(s, 200, 1.5);
    CHECK(r.verdict == "true");
    // finite-n rate carries an ln(C)/n bias from the eigenbasis conditioning
    CHECK(r.rate ==
          doctest::Approx(std::log((3.0 + std::sqrt(5.0)) / 2.0)).epsilon(1e-2));
  }
  SUBCASE("elliptic energy fails the growth test") {
    CocycleSpec s;
    s.lambda = 0.0;
    s.E = 1.0;
    s.alpha = golden_alpha();
    auto r = uniform_hyperbolicity_test(s, 200, 1.05);
    CHECK(r.verdict == "false");
    CHECK_FALSE(r.growth_ok);
  }
}

TEST_CASE("cocycle conjugation") {
  AlphaSpec a = golden_alpha();

  SUBCASE("identity conjugator returns the cocycle") {
    CocycleSpec s;
    s.lambda = 0.4;
    s.E = 0.7;
    s.alpha = a;
    TrigMat c = conjugate_cocycle(TrigMat::identity(1), amo_trig(s), a);
    for (double x : {0.0, 0.37}) {
      Mat2c want = amo_matrix(s, x);
      CHECK((c.eval(cplx(x, 0)) - want).fro() < 1e-12);
    }
  }
  SUBCASE("rotation path conjugation of a constant rotation") {
    int k = 3;
    double th = 0.17;
    TrigMat b = TrigMat::rotation_path(0.0, k, 2);
    TrigMat rth = constant_mat(rot2pi(th));
    TrigMat c = conjugate_cocycle(b, rth, a);
    // result is the constant rotation R_{th - k alpha / 2}
    Mat2d want = rot2pi(th - 0.5 * k * a.value());
    for (double x : {0.11, 0.9, 1.7}) {
      CHECK((c.eval(cplx(x, 0)) - to_complex(want)).fro() < 1e-10);
    }
  }
  SUBCASE("conjugating back with the inverse restores the cocycle") {
    CocycleSpec s;
    s.lambda = 0.25;
    s.E = -0.4;
    s.alpha = a;
    TrigMat b = TrigMat::rotation_path(0.3, 2, 2) *
                TrigMat::rotation_path(0.05, -1, 2);
    TrigMat c = conjugate_cocycle(b, amo_trig(s), a);
    TrigMat back = conjugate_cocycle(sl2_inverse_poly(b), c, a);
    for (double x : {0.0, 0.41, 1.23}) {
      CHECK((back.eval(cplx(x, 0)) - amo_matrix(s, x)).fro() < 1e-9);
    }
  }
  SUBCASE("degree shift rule for the rotation number") {
    CocycleSpec s;
    s.lambda = 0.3;
    s.E = 0.5;
    s.alpha = a;
    TrigMat b = TrigMat::rotation_path(0.2, 2, 2);
    TrigMat c = conjugate_cocycle(b, amo_trig(s), a);
    long long n = 30000;
    double rho_a = rotation_number(s, n);
    double rho_c = rotation_number_generic(
        [&](double x) { return c.eval_real(x); }, a, n);
    // 2 rho(conjugated) - 2 rho(A) = -deg(B) alpha (mod Z)
    double lhs = 2.0 * rho_c - 2.0 * rho_a + degree(b) * a.value();
    CHECK(std::abs(std::remainder(lhs, 1.0)) < 10.0 / n);
  }
}

TEST_CASE("degree of trigonometric SL2 loops") {
  for (int k : {-3, 0, 1, 4})
    CHECK(degree(TrigMat::rotation_path(0.21, k, 2)) == k);
  CHECK(degree(constant_mat(rot2pi(0.3))) == 0);
  // constant shear has winding zero and a nonvanishing first column
  CHECK(degree(constant_mat(Mat2d{1.0, 0.7, 0.0, 1.0})) == 0);
  // additivity on products (loop classes add in pi_1(SL2))
  TrigMat b1 = TrigMat::rotation_path(0.3, 2, 2);
  TrigMat b2 = TrigMat::rotation_path(0.11, -5, 2);
  TrigMat sh = constant_mat(Mat2d{1.0, 0.7, 0.0, 1.0});
  CHECK(degree(b1 * b2) == -3);
  CHECK(degree(b1 * sh * b2) == -3);
  CHECK(degree(b1 * sh) == 2);
}

TEST_CASE("amo_trig matches the closed form") {
  CocycleSpec s;
  s.lambda = 0.6;
  s.E = -1.1;
  s.alpha = golden_alpha();
  TrigMat t = amo_trig(s);
  for (double x : {0.0, 0.2, 0.86}) {
    CHECK((t.eval(cplx(x, 0)) - amo_matrix(s, x)).fro() < 1e-14);
  }
  // complexified evaluation also matches
  s.im_offset = 0.03;
  CHECK((t.eval(cplx(0.3, 0.03)) - amo_matrix(s, 0.3)).fro() < 1e-13);
}
