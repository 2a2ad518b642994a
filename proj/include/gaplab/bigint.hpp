#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>

namespace gaplab {

using bigint = boost::multiprecision::cpp_int;

// msb index (0-based); 0 for x == 0.
inline int big_bits(const bigint& x) {
  if (x == 0) return 0;
  return static_cast<int>(boost::multiprecision::msb(x)) + 1;
}

// Natural log of a positive bigint, accurate to ~1e-15 relative.
inline double big_log(const bigint& x) {
  int b = big_bits(x);
  if (b <= 62) return std::log(static_cast<double>(x.convert_to<long long>()));
  bigint top = x >> (b - 62);
  return std::log(static_cast<double>(top.convert_to<long long>())) +
         (b - 62) * 0.6931471805599453094;
}

// num/den as a double, with both operands arbitrarily large. Relative error
// is a few ulps of long double.
inline double big_ratio(const bigint& num, const bigint& den) {
  if (num == 0) return 0.0;
  bool neg = num < 0;
  bigint n = neg ? bigint(-num) : num;
  int bn = big_bits(n), bd = big_bits(den);
  int sn = bn > 62 ? bn - 62 : 0;
  int sd = bd > 62 ? bd - 62 : 0;
  long double nn = static_cast<long double>((n >> sn).convert_to<long long>());
  long double dd = static_cast<long double>((den >> sd).convert_to<long long>());
  long double r = ldexpl(nn / dd, sn - sd);
  return neg ? -static_cast<double>(r) : static_cast<double>(r);
}

// Round exp(L) (L in nats, L >= 0) to a bigint. Accuracy is limited by the
// double-precision argument, which is fine for digit synthesis.
inline bigint big_exp(double L) {
  if (L < 43.0) return bigint(static_cast<long long>(std::llround(std::exp(L))));
  const double ln2 = 0.6931471805599453094;
  int k = static_cast<int>(L / ln2) - 52;
  double m = std::exp(L - k * ln2);  // in [2^52, 2^54)
  bigint r = bigint(static_cast<long long>(std::llround(m)));
  return r << k;
}

}  // namespace gaplab
