#include "polyurn/oracle.hpp"

#include <map>
#include <set>

#include "polyurn/analytics.hpp"

namespace polyurn::oracle {

Rational step_probability(const UrnSpec& spec, std::int64_t W, std::uint64_t n,
                          std::uint32_t k) {
  const std::int64_t T = spec.total_at(n);
  const std::int64_t B = T - W;
  if (W < 0 || B < 0) throw SpecError("state outside the urn");
  if (k > spec.m) return Rational(0);
  if (spec.scheme == Sampling::WithReplacement) {
    // C(m,k) W^k B^{m-k} / T^m
    Int num = binomial(spec.m, k) * int_pow(Int(static_cast<long>(W)), k) *
              int_pow(Int(static_cast<long>(B)), spec.m - k);
    Rational p;
    Int den = int_pow(Int(static_cast<long>(T)), spec.m);
    mpq_set_num(p.get_mpq_t(), num.get_mpz_t());
    mpq_set_den(p.get_mpq_t(), den.get_mpz_t());
    p.canonicalize();
    return p;
  }
  if (T < static_cast<std::int64_t>(spec.m))
    throw SpecError("model M cannot draw: T_n < m");
  if (W < k || B < static_cast<std::int64_t>(spec.m - k)) return Rational(0);
  Int num = binomial(static_cast<unsigned long>(W), k) *
            binomial(static_cast<unsigned long>(B), spec.m - k);
  Int den = binomial(static_cast<unsigned long>(T), spec.m);
  Rational p;
  mpq_set_num(p.get_mpq_t(), num.get_mpz_t());
  mpq_set_den(p.get_mpq_t(), den.get_mpz_t());
  p.canonicalize();
  return p;
}

ExactDistribution exact_distribution(const UrnSpec& spec, std::uint64_t n) {
  spec.validate();
  if (n > kMaxDepth)
    throw GuardError("exact distribution capped at n = " + std::to_string(kMaxDepth));
  if (spec.m > kMaxSampleSize)
    throw GuardError("exact distribution capped at m = " + std::to_string(kMaxSampleSize));

  std::map<std::int64_t, Rational> cur;
  cur[spec.W0] = Rational(1);
  for (std::uint64_t step = 0; step < n; ++step) {
    std::map<std::int64_t, Rational> next;
    const std::int64_t T = spec.total_at(step);
    for (const auto& [W, p] : cur) {
      for (std::uint32_t k = 0; k <= spec.m; ++k) {
        const Rational q = step_probability(spec, W, step, k);
        if (q == 0) continue;
        const std::int64_t W2 = W + spec.increment(k);
        if (W2 < 0 || W2 > T + spec.sigma)
          throw SpecError("non-tenable scheme: state (" + std::to_string(W) + ", n=" +
                          std::to_string(step) + ") removes absent balls");
        next[W2] += p * q;
      }
    }
    cur = std::move(next);
  }

  ExactDistribution out;
  out.n = n;
  out.support.assign(cur.begin(), cur.end());
  return out;
}

Rational distribution_mean(const ExactDistribution& d) {
  Rational s(0);
  for (const auto& [w, p] : d.support) s += Rational(static_cast<long>(w)) * p;
  return s;
}

Rational distribution_moment(const ExactDistribution& d, unsigned power) {
  Rational s(0);
  for (const auto& [w, p] : d.support) {
    Rational x(static_cast<long>(w));
    Rational acc(1);
    for (unsigned i = 0; i < power; ++i) acc *= x;
    s += acc * p;
  }
  return s;
}

std::vector<StepAtom> exact_step_law(const UrnSpec& spec, std::int64_t W,
                                     std::uint64_t n) {
  spec.validate();
  // Values g_{n+1} (y_hat + k h) with hypergeometric/binomial masses.
  const Rational g_next = analytics::g_exact(spec, n + 1);
  const Rational lam = analytics::urn_index(spec);
  const Rational tr = analytics::pool_ratio(spec);
  const Rational npt = Rational(static_cast<long>(n)) + tr;
  const Rational ratio = (npt + lam) / npt;  // g_n / g_{n+1}
  Rational e_n(0), e_next(0);
  if (spec.a_m != 0) {
    e_n = analytics::mean_white_exact(spec, n);
    e_next = analytics::mean_white_exact(spec, n + 1);
  }
  const Rational y_hat = (Rational(1) - ratio) * (Rational(static_cast<long>(W)) - e_n) +
                         e_n - e_next + Rational(static_cast<long>(spec.a_m));
  std::vector<StepAtom> atoms;
  for (std::uint32_t k = 0; k <= spec.m; ++k) {
    const Rational mass = step_probability(spec, W, n, k);
    if (mass == 0) continue;
    const Rational value =
        g_next * (y_hat + Rational(static_cast<long>(k) * static_cast<long>(spec.h())));
    atoms.push_back({value, mass});
  }
  return atoms;
}

Rational step_law_moment(const std::vector<StepAtom>& atoms, unsigned power) {
  Rational s(0);
  for (const auto& a : atoms) {
    Rational acc(1);
    for (unsigned i = 0; i < power; ++i) acc *= a.value;
    s += acc * a.mass;
  }
  return s;
}

ReachabilityResult reachability_scan(const UrnSpec& spec, std::uint32_t depth) {
  spec.validate();
  if (depth > 10) throw GuardError("reachability scan capped at depth 10");

  std::set<std::int64_t> level{spec.W0};
  for (std::uint32_t step = 0; step < depth; ++step) {
    const std::int64_t T = spec.total_at(step);
    std::set<std::int64_t> next;
    for (const std::int64_t W : level) {
      const std::int64_t B = T - W;
      if (spec.scheme == Sampling::WithoutReplacement &&
          T < static_cast<std::int64_t>(spec.m)) {
        return {false, "T_" + std::to_string(step) + " = " + std::to_string(T) +
                           " < m: sample impossible"};
      }
      for (std::uint32_t k = 0; k <= spec.m; ++k) {
        // Positive-probability sample compositions only.
        if (spec.scheme == Sampling::WithoutReplacement) {
          if (W < k || B < static_cast<std::int64_t>(spec.m - k)) continue;
        } else {
          if (k > 0 && W == 0) continue;
          if (k < spec.m && B == 0) continue;
        }
        const std::int64_t W2 = W + spec.increment(k);
        const std::int64_t B2 = (T + spec.sigma) - W2;
        if (W2 < 0 || B2 < 0) {
          return {false, "state W=" + std::to_string(W) + ", B=" + std::to_string(B) +
                             " at step " + std::to_string(step) + " with k=" +
                             std::to_string(k) + " whites drawn removes absent balls"};
        }
        next.insert(W2);
      }
    }
    level = std::move(next);
  }
  return {true, ""};
}

}  // namespace polyurn::oracle
