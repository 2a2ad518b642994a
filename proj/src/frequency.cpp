#include "gaplab/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaplab/util.hpp"

namespace gaplab {

namespace {

bigint pos_mod(bigint x, const bigint& q) {
  x %= q;
  if (x < 0) x += q;
  return x;
}

// Required digit count so that |k|/(q_N(q_N+q_{N-1})) < 2^-g, assuming the
// slowest (golden) growth of denominators from scratch.
long long digits_needed(long long k, int guard) {
  double ln_q = 0.5 * (std::log(static_cast<double>(std::llabs(k) + 1)) +
                       guard * 0.6931471805599453);
  return 2 + static_cast<long long>(std::ceil(ln_q / std::log(1.6180339887)));
}

}  // namespace

IrrationalFrequency::IrrationalFrequency(std::vector<bigint> digits,
                                         int guard_bits, bool truncated)
    : a_(std::move(digits)), guard_(guard_bits), trunc_(truncated) {
  if (a_.empty())
    throw stage_error("frequency", "empty digit list");
  for (const bigint& d : a_)
    if (d < 1) throw stage_error("frequency", "partial quotients must be >= 1");
  p_.resize(a_.size() + 1);
  q_.resize(a_.size() + 1);
  p_[0] = 0;
  q_[0] = 1;
  p_[1] = 1;
  q_[1] = a_[0];
  for (std::size_t k = 2; k < p_.size(); ++k) {
    p_[k] = a_[k - 1] * p_[k - 1] + p_[k - 2];
    q_[k] = a_[k - 1] * q_[k - 1] + q_[k - 2];
  }
}

double IrrationalFrequency::value() const {
  return big_ratio(p_.back(), q_.back());
}

std::vector<double> IrrationalFrequency::growth_ratios() const {
  std::vector<double> r;
  for (std::size_t n = 1; n + 1 < q_.size(); ++n)
    r.push_back(big_log(q_[n + 1]) / big_ratio(q_[n], 1));
  return r;
}

IrrationalFrequency build_frequency(std::vector<bigint> digits,
                                    int guard_bits) {
  return IrrationalFrequency(std::move(digits), guard_bits);
}

IrrationalFrequency build_frequency(std::vector<long long> digits,
                                    int guard_bits) {
  std::vector<bigint> d(digits.begin(), digits.end());
  return IrrationalFrequency(std::move(d), guard_bits);
}

BuildResult build_frequency(double real_sample, int digit_budget,
                            int guard_bits) {
  if (!(real_sample > 0.0 && real_sample < 1.0))
    throw stage_error("frequency", "sample must lie in (0,1)");
  // Interval Gauss map: track [lo,hi] containing every real consistent with
  // the double sample; emit a digit only when floor(1/x) is the same across
  // the whole interval.
  // slack of one ulp at unit scale: covers half-ulp rounding of upstream
  // O(1) computations (e.g. sqrt(2)-1), not just of the sample itself
  long double u = std::ldexp(1.0L, -52);
  long double lo = real_sample - u, hi = real_sample + u;
  std::vector<bigint> digits;
  bool truncated = false;
  bool rational = false;
  while (static_cast<int>(digits.size()) < digit_budget) {
    if (lo <= 4e-18L) {  // remainder indistinguishable from 0: terminating
      rational = true;
      break;
    }
    long double tlo = 1.0L / hi, thi = 1.0L / lo;
    long double alo = floorl(tlo), ahi = floorl(thi);
    if (alo != ahi) {
      // interval straddles an integer: if it hugs that integer tightly the
      // remainder is indistinguishable from 0 -> terminating expansion
      long double rat_eps = 1e-12L * thi + 1e-15L;
      if (ahi == alo + 1 && thi - ahi <= rat_eps && ahi - tlo <= rat_eps) {
        digits.emplace_back(static_cast<long long>(llroundl(ahi)));
        lo = tlo - ahi;
        hi = thi - ahi;
        continue;  // next pass sees lo <= 0 and issues the rational verdict
      }
      truncated = true;
      break;
    }
    digits.emplace_back(static_cast<long long>(alo));
    lo = tlo - alo;
    hi = thi - alo;
    // inflate by the local rounding slop of the two divisions
    long double slop = thi * 2e-19L + 1e-19L;
    lo -= slop;
    hi += slop;
  }
  BuildResult res;
  if (rational) {
    if (digits.empty())
      throw stage_error("frequency", "sample is numerically zero");
    IrrationalFrequency f(digits, guard_bits);
    res.rational = true;
    res.rat_p = f.pnum().back().convert_to<long long>();
    res.rat_q = f.qden().back().convert_to<long long>();
    return res;
  }
  if (digits.size() < 2)
    throw stage_error("frequency", "could not certify two digits");
  res.freq = IrrationalFrequency(std::move(digits), guard_bits, truncated);
  return res;
}

IrrationalFrequency golden_frequency(int n_digits, int guard_bits) {
  std::vector<bigint> d(static_cast<std::size_t>(n_digits), bigint(1));
  return IrrationalFrequency(std::move(d), guard_bits);
}

TorusDist torus_distance(const IrrationalFrequency& alpha, long long k) {
  return torus_distance_affine(alpha, 0.0, k);
}

TorusDist torus_distance_affine(const IrrationalFrequency& alpha, double c,
                                long long k) {
  const auto& p = alpha.pnum();
  const auto& q = alpha.qden();
  std::size_t N = p.size() - 1;
  const bigint& qN = q[N];
  // |alpha - p_N/q_N| <= 1/(q_N (q_N + q_{N-1})) regardless of the next digit
  bigint err_den = qN * (qN + q[N - 1]);
  double err = k == 0 ? 0.0 : big_ratio(bigint(std::llabs(k)), err_den);
  double guard_tol = std::ldexp(1.0, -alpha.guard_bits());
  if (err >= guard_tol)
    throw stage_error("frequency",
                      "precision exhausted: need about " +
                          std::to_string(digits_needed(k, alpha.guard_bits())) +
                          " digits, have " + std::to_string(alpha.depth()));
  // exact dyadic decomposition of c
  bigint num;
  bigint den;
  if (c == 0.0) {
    num = pos_mod(bigint(k) * p[N], qN);
    den = qN;
  } else {
    int e;
    double m = std::frexp(std::fabs(c), &e);
    long long mant = static_cast<long long>(std::ldexp(m, 53));
    int sh = 53 - e;  // |c| = mant / 2^sh
    bigint cnum = bigint(c < 0 ? -mant : mant);
    if (sh >= 0) {
      den = qN << sh;
      num = pos_mod(cnum * qN + ((bigint(k) * p[N]) << sh), den);
    } else {
      den = qN;
      num = pos_mod((cnum << (-sh)) * qN + bigint(k) * p[N], den);
    }
  }
  TorusDist d;
  if (num == 0 && k == 0) {
    d.exact_zero = true;
    return d;
  }
  bigint r = std::min(num, bigint(den - num));
  d.value = big_ratio(r, den);
  d.err = err;
  d.exact_zero = (num == 0 && err == 0.0);
  return d;
}

PhasePoint PhasePoint::lattice(long long m, long long n,
                               const IrrationalFrequency& alpha) {
  PhasePoint ph;
  ph.half_lattice = true;
  ph.m = m;
  ph.n = n;
  ph.value = frac1(0.5 * (m * alpha.value() + n));
  return ph;
}

TorusDist resonance_distance(const IrrationalFrequency& alpha,
                             const PhasePoint& theta, long long k) {
  if (theta.half_lattice) {
    // 2 theta - k alpha = (m - k) alpha + n
    if (theta.m == k) return TorusDist{0.0, 0.0, true};
    return torus_distance(alpha, theta.m - k);
  }
  return torus_distance_affine(alpha, 2.0 * theta.value, -k);
}

double beta_estimate(const IrrationalFrequency& alpha, int window) {
  std::vector<double> r = alpha.growth_ratios();
  if (static_cast<int>(r.size()) < window)
    throw stage_error("frequency",
                      "beta estimate needs " + std::to_string(window + 1) +
                          " digits, have " + std::to_string(alpha.depth()));
  double best = 0.0;
  for (std::size_t i = r.size() - window; i < r.size(); ++i)
    best = std::max(best, r[i]);
  return best;
}

IrrationalFrequency synth_beta_frequency(double beta_target, int n_digits,
                                         unsigned long long seed,
                                         SynthOptions opts) {
  if (!(beta_target > 0.0))
    throw stage_error("frequency", "beta target must be positive");
  if (n_digits < 2) throw stage_error("frequency", "need at least 2 digits");
  auto rng = rng_stream(seed, 0);
  std::vector<bigint> digits;
  bigint q_prev = 0, q_cur = 1;  // q_{-1}=0, q_0=1: true convergent seeds
  const double ln2 = 0.6931471805599453;
  for (int idx = 1; idx <= n_digits; ++idx) {
    bool active = !opts.sparse || (idx & (idx - 1)) == 0;
    double lnq = big_log(q_cur);
    double qd = big_ratio(q_cur, 1);
    // target digit: a ~ e^{beta q}/q so that ln q_{n+1} ~ beta q_n
    double ln_a = std::isfinite(qd) ? beta_target * qd - lnq : HUGE_VAL;
    bigint digit;
    if (active && std::isfinite(ln_a) && ln_a >= std::log(1.5) &&
        ln_a <= opts.max_digit_bits * ln2) {
      digit = big_exp(ln_a);
    } else if (active && ln_a > opts.max_digit_bits * ln2 && opts.strict) {
      throw stage_error("frequency",
                        "digit overflow at index " + std::to_string(idx) +
                            "; max feasible n_digits = " +
                            std::to_string(idx - 1));
    } else {
      // jitter digits stay under the beta envelope so they never dominate
      // the growth-ratio estimator
      long long cap = 3;
      if (ln_a < 1.4)
        cap = std::max(1LL, static_cast<long long>(
                                std::floor(std::exp(std::max(ln_a, 0.0)))));
      digit = std::min(1 + static_cast<long long>(rng() % 3), cap);
    }
    digits.push_back(digit);
    bigint q_next = digit * q_cur + q_prev;
    q_prev = q_cur;
    q_cur = q_next;
  }
  return IrrationalFrequency(std::move(digits));
}

SmallDivisorReport smallest_divisor(const IrrationalFrequency& alpha,
                                    long long k_max) {
  if (k_max < 1) throw stage_error("frequency", "k_max must be >= 1");
  const auto& p = alpha.pnum();
  const auto& q = alpha.qden();
  std::size_t N = p.size() - 1;
  const bigint& qN = q[N];
  const bigint& pN = p[N];
  // certify at the largest |j|
  (void)torus_distance(alpha, k_max);
  SmallDivisorReport rep;
  bigint r = 0;
  bigint best_num = qN;  // sentinel > any distance numerator
  for (long long j = 1; j <= k_max; ++j) {
    r += pN;
    if (r >= qN) r -= qN;
    bigint d = std::min(r, bigint(qN - r));
    if (d < best_num) {
      best_num = d;
      rep.argmin = j;
    }
  }
  rep.value = big_ratio(best_num, qN);
  int w = std::min<int>(10, static_cast<int>(alpha.depth()) - 1);
  double beta = w >= 1 ? beta_estimate(alpha, w) : 0.0;
  rep.floor_2beta = std::exp(-2.0 * beta * static_cast<double>(k_max));
  rep.floor_3beta = std::exp(-3.0 * beta * static_cast<double>(k_max));
  return rep;
}

ResonanceReport resonances(const IrrationalFrequency& alpha,
                           const PhasePoint& theta, double eps0,
                           long long cap) {
  if (cap < 1) throw stage_error("frequency", "cap must be >= 1");
  ResonanceReport rep;
  rep.theta = theta.value;
  rep.eps0 = eps0;
  rep.cap = cap;
  bool exact_hit = false;

  TorusDist d0 = resonance_distance(alpha, theta, 0);
  rep.resonances.push_back({0, d0.value});
  exact_hit |= d0.exact_zero;
  TorusDist run_min = d0;

  auto leq = [](const TorusDist& a, const TorusDist& b) {
    if (a.exact_zero) return true;
    if (b.exact_zero) return false;
    return a.value <= b.value;
  };

  for (long long k = 1; k <= cap; ++k) {
    TorusDist dp = resonance_distance(alpha, theta, k);
    TorusDist dm = resonance_distance(alpha, theta, -k);
    TorusDist level_min = run_min;
    if (leq(dp, level_min)) level_min = dp;
    if (leq(dm, level_min)) level_min = dm;
    double thr = std::exp(-eps0 * static_cast<double>(k));
    if (leq(dp, level_min) && (dp.exact_zero || dp.value <= thr)) {
      rep.resonances.push_back({k, dp.value});
      exact_hit |= dp.exact_zero;
    }
    if (leq(dm, level_min) && (dm.exact_zero || dm.value <= thr)) {
      rep.resonances.push_back({-k, dm.value});
      exact_hit |= dm.exact_zero;
    }
    run_min = level_min;
  }
  rep.truncated = !exact_hit;
  return rep;
}

AlphaSpec AlphaSpec::make_rational(long long p, long long q) {
  if (q <= 0) throw stage_error("frequency", "rational denominator must be > 0");
  long long g = std::gcd(p < 0 ? -p : p, q);
  if (g > 1) {
    p /= g;
    q /= g;
  }
  AlphaSpec s;
  s.rational = true;
  s.p = ((p % q) + q) % q;
  s.q = q;
  return s;
}

AlphaSpec AlphaSpec::make_irrational(IrrationalFrequency f) {
  AlphaSpec s;
  s.rational = false;
  s.irr = std::move(f);
  return s;
}

double AlphaSpec::value() const {
  return rational ? static_cast<double>(p) / static_cast<double>(q)
                  : irr.value();
}

double AlphaSpec::phase_after(double x0, long long k) const {
  if (rational) {
    long long r = ((k % q) * (p % q)) % q;
    if (r < 0) r += q;
    return frac1(x0 + static_cast<double>(r) / static_cast<double>(q));
  }
  const auto& p_ = irr.pnum();
  const auto& q_ = irr.qden();
  const bigint& qN = q_.back();
  bigint r = pos_mod(bigint(k) * p_.back(), qN);
  return frac1(x0 + big_ratio(r, qN));
}

}  // namespace gaplab
