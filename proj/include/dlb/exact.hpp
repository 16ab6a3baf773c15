#pragma once

// Exact arithmetic substrate: arbitrary-precision integers/rationals plus a
// double conversion that survives magnitudes far outside double range.

#include <boost/multiprecision/cpp_int.hpp>

namespace dlb {

using bigint = boost::multiprecision::cpp_int;
using bigrat = boost::multiprecision::cpp_rational;

// num/den as double. den > 0. Works for operands with tens of thousands of
// bits by shifting both down to ~96 significant bits first (the quotient is
// preserved to well below double precision).
inline double ratio_as_double(const bigint& num, const bigint& den) {
  if (num.is_zero()) return 0.0;
  const bool negative = num < 0;
  bigint n = boost::multiprecision::abs(num);
  bigint d = den;
  const std::size_t top = std::max(boost::multiprecision::msb(n), boost::multiprecision::msb(d));
  if (top > 96) {
    const std::size_t shift = top - 96;
    n >>= shift;
    d >>= shift;
    if (d.is_zero()) d = 1;  // ratio underflows/overflows double anyway
  }
  const double q = n.convert_to<double>() / d.convert_to<double>();
  return negative ? -q : q;
}

inline double ratio_as_double(const bigrat& r) {
  return ratio_as_double(boost::multiprecision::numerator(r), boost::multiprecision::denominator(r));
}

}  // namespace dlb
