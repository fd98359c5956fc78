#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace polyurn {

// Exact arithmetic backends. All classification decisions, the enumeration
// oracle and every closed-form identity check run on these; floating point
// only enters through explicit `_float` code paths.
using Int = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(long long num, long long den = 1) {
  Rational r(static_cast<long>(num), static_cast<long>(den));
  r.canonicalize();
  return r;
}

inline double to_double(const Rational& r) { return r.get_d(); }

// "p/q" (or just "p" for integers), canonical form.
inline std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline Int binomial(unsigned long n, unsigned long k) {
  Int out;
  mpz_bin_uiui(out.get_mpz_t(), n, k);
  return out;
}

// x(x-1)...(x-k+1) over the integers; x may be negative.
inline Int falling_factorial(Int x, unsigned k) {
  Int out = 1;
  for (unsigned i = 0; i < k; ++i) {
    out *= x;
    x -= 1;
  }
  return out;
}

inline Int int_pow(Int base, unsigned e) {
  Int out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), e);
  return out;
}

}  // namespace polyurn
