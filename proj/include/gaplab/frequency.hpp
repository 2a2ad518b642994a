#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gaplab/bigint.hpp"

namespace gaplab {

// Irrational frequency alpha in (0,1) held as a continued fraction
// [0; a1, a2, ...] together with its convergents p_n/q_n. All torus
// arithmetic goes through the convergents; alpha is never collapsed to a
// bare double except for display and for phase iteration below k ~ 1e6.
//
// Convergent seeds: p0=0, q0=1, p1=1, q1=a1, then
//   p_k = a_k p_{k-1} + p_{k-2},  q_k = a_k q_{k-1} + q_{k-2}.
class IrrationalFrequency {
 public:
  IrrationalFrequency() = default;
  IrrationalFrequency(std::vector<bigint> digits, int guard_bits = 30,
                      bool truncated = false);

  const std::vector<bigint>& digits() const { return a_; }
  const std::vector<bigint>& pnum() const { return p_; }
  const std::vector<bigint>& qden() const { return q_; }
  int guard_bits() const { return guard_; }
  bool truncated() const { return trunc_; }
  std::size_t depth() const { return a_.size(); }

  // Best double approximation p_N/q_N.
  double value() const;

  // ln(q_{n+1}) / q_n for n = 1..N-1 (index 0 of the result is n=1).
  std::vector<double> growth_ratios() const;

 private:
  std::vector<bigint> a_, p_, q_;
  int guard_ = 30;
  bool trunc_ = false;
};

// Result of torus-distance evaluation: value is ||.||_{R/Z}, err a certified
// bound on |value - truth| coming from the convergent substitution.
struct TorusDist {
  double value = 0.0;
  double err = 0.0;
  bool exact_zero = false;  // distance is exactly 0 (lattice phase case)
};

// A phase theta in [0,1). Either a plain double (treated as the exact dyadic
// rational it represents) or the exact half-lattice point (m*alpha + n)/2,
// which is how resonant phases enter the reducibility pipeline.
struct PhasePoint {
  double value = 0.0;
  bool half_lattice = false;
  long long m = 0, n = 0;

  static PhasePoint real(double v) { return {v, false, 0, 0}; }
  static PhasePoint lattice(long long m, long long n,
                            const IrrationalFrequency& alpha);
};

struct Resonance {
  long long k = 0;
  double dist = 0.0;
};

struct ResonanceReport {
  double theta = 0.0;
  double eps0 = 0.0;
  long long cap = 0;
  std::vector<Resonance> resonances;  // |k| nondecreasing, +k before -k
  bool truncated = true;              // scan stopped at the cap, tail unknown
};

// Outcome of certified digit extraction from a real sample. Exactly one of
// freq/rational is set; `truncated` on freq means the uncertainty interval
// stopped the extraction before the requested budget.
struct BuildResult {
  std::optional<IrrationalFrequency> freq;
  bool rational = false;
  long long rat_p = 0, rat_q = 1;
};

IrrationalFrequency build_frequency(std::vector<bigint> digits,
                                    int guard_bits = 30);
IrrationalFrequency build_frequency(std::vector<long long> digits,
                                    int guard_bits = 30);

// Certified Gauss-map extraction from a double sample: digits are emitted
// only while the floor is unambiguous for every real within a half-ulp of
// the sample; terminating expansions give a rational verdict instead.
BuildResult build_frequency(double real_sample, int digit_budget = 64,
                            int guard_bits = 30);

// Golden mean [0;1,1,1,...] with n digits.
IrrationalFrequency golden_frequency(int n_digits, int guard_bits = 30);

// ||k alpha|| with a certified error bound. Throws stage_error("frequency")
// if the available convergents cannot certify 2^-guard_bits.
TorusDist torus_distance(const IrrationalFrequency& alpha, long long k);

// ||c + k alpha|| where c is the exact dyadic value of a double.
TorusDist torus_distance_affine(const IrrationalFrequency& alpha, double c,
                                long long k);

// ||2 theta - k alpha|| honoring exact half-lattice phases.
TorusDist resonance_distance(const IrrationalFrequency& alpha,
                             const PhasePoint& theta, long long k);

// max of ln q_{n+1}/q_n over the last `window` indices; needs at least
// window+1 convergents.
double beta_estimate(const IrrationalFrequency& alpha, int window = 10);

struct SynthOptions {
  bool sparse = false;     // big digits only on indices 1,2,4,8,...
  bool strict = false;     // throw instead of falling back to jitter digits
  int max_digit_bits = 1 << 17;
};

// Frequency with beta(alpha) ~ beta_target: on the active subsequence the
// digit is chosen so ln q_{n+1} ~ beta * q_n; remaining digits are small
// jitter from `seed`. Digits that would exceed the bit budget fall back to
// jitter (or throw in strict mode, naming the feasible digit count).
IrrationalFrequency synth_beta_frequency(double beta_target, int n_digits,
                                         unsigned long long seed,
                                         SynthOptions opts = {});

struct SmallDivisorReport {
  double value = 0.0;      // inf over 0<|j|<=k_max of ||j alpha||
  long long argmin = 0;    // positive j attaining it
  double floor_2beta = 0.0;  // e^{-2 beta k} reference floor
  double floor_3beta = 0.0;  // e^{-3 beta k} reference floor
};

SmallDivisorReport smallest_divisor(const IrrationalFrequency& alpha,
                                    long long k_max);

// eps0-resonances of theta: k with ||2 theta - k alpha|| <= e^{-eps0 |k|}
// that also minimize the distance over |j| <= |k|. k=0 is always included.
// Ties at equal distance go to smaller |k| first, then to positive k.
ResonanceReport resonances(const IrrationalFrequency& alpha,
                           const PhasePoint& theta, double eps0,
                           long long cap);

// Either a rational p/q (lowest terms) or an irrational frequency; the
// shared handle modules take wherever both cases are meaningful.
struct AlphaSpec {
  bool rational = false;
  long long p = 0, q = 1;
  IrrationalFrequency irr;

  static AlphaSpec make_rational(long long p, long long q);
  static AlphaSpec make_irrational(IrrationalFrequency f);
  double value() const;
  // frac(x0 + k*alpha), exact for rationals, convergent-anchored otherwise.
  double phase_after(double x0, long long k) const;
};

}  // namespace gaplab
