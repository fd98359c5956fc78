#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "polyurn/rational.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::oracle {

inline constexpr std::uint64_t kMaxDepth = 12;
inline constexpr std::uint32_t kMaxSampleSize = 3;

// Exact law of W_n, support sorted ascending, masses summing to exactly 1.
struct ExactDistribution {
  std::uint64_t n = 0;
  std::vector<std::pair<std::int64_t, Rational>> support;
};

// Dynamic program over (W, step); memoization on the Markov state keeps the
// state space O(m n) wide. Guards: n <= 12, m <= 3.
ExactDistribution exact_distribution(const UrnSpec& spec, std::uint64_t n);

Rational distribution_mean(const ExactDistribution& d);
Rational distribution_moment(const ExactDistribution& d, unsigned power);

// P(k white balls in the next sample | W at time n), exact.
Rational step_probability(const UrnSpec& spec, std::int64_t W, std::uint64_t n,
                          std::uint32_t k);

// One atom of the conditional law of the martingale difference X_{n+1}.
struct StepAtom {
  Rational value;
  Rational mass;
};

// The m+1 atoms (zero-mass atoms dropped); exact mean is zero.
std::vector<StepAtom> exact_step_law(const UrnSpec& spec, std::int64_t W,
                                     std::uint64_t n);

Rational step_law_moment(const std::vector<StepAtom>& atoms, unsigned power);

struct ReachabilityResult {
  bool tenable_within_depth = true;
  std::string violation;  // first offending state/step when not tenable
};

// Breadth-first sweep of every reachable configuration up to `depth` steps;
// reports whether any positive-probability draw would remove absent balls.
ReachabilityResult reachability_scan(const UrnSpec& spec, std::uint32_t depth);

}  // namespace polyurn::oracle
