#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polyurn/rational.hpp"

namespace polyurn {

// Invalid or inconsistent scheme / parameters. CLI maps this to exit code 2.
struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cost guard tripped (exact arithmetic or enumeration too large). Exit code 3.
struct GuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sampling scheme for the m balls drawn each step: without replacement
// (hypergeometric step law) or with replacement (binomial step law).
enum class Sampling { WithoutReplacement, WithReplacement };

std::string to_string(Sampling s);          // "M" / "R"
Sampling sampling_from_string(const std::string& s);

// A balanced affine two-color urn scheme with multiple drawings.
// The full (m+1)-row replacement matrix is determined by (m, sigma,
// a_{m-1}, a_m): row k adds a_k = (m-k)(a_{m-1}-a_m) + a_m white and
// sigma - a_k black balls when the sample held m-k white balls.
struct UrnSpec {
  std::uint32_t m = 1;      // sample size per step
  std::int64_t sigma = 1;   // balance: total balls added per step
  std::int64_t a_m_minus_1 = 0;
  std::int64_t a_m = 0;
  std::int64_t W0 = 1;      // initial white balls
  std::int64_t B0 = 1;      // initial black balls
  Sampling scheme = Sampling::WithoutReplacement;

  std::int64_t T0() const { return W0 + B0; }
  // Row difference h = a_{m-1} - a_m; the white increment after a sample
  // with k white balls is a_{m-k} = k*h + a_m.
  std::int64_t h() const { return a_m_minus_1 - a_m; }
  std::int64_t a(std::uint32_t k) const {
    return static_cast<std::int64_t>(m - k) * h() + a_m;
  }
  std::int64_t b(std::uint32_t k) const { return sigma - a(k); }
  std::int64_t increment(std::uint32_t whites_in_sample) const {
    return static_cast<std::int64_t>(whites_in_sample) * h() + a_m;
  }
  std::int64_t total_at(std::uint64_t n) const {
    return T0() + sigma * static_cast<std::int64_t>(n);
  }

  // Throws SpecError when structural invariants fail (m >= 1, sigma >= 1,
  // enough initial balls for the sampling scheme, and the standing
  // assumptions W0 >= 1 when a_m = 0, B0 >= 1 when b_0 = 0).
  void validate() const;

  bool operator==(const UrnSpec&) const = default;
};

// Rows (a_k, b_k) for k = 0..m.
std::vector<std::pair<std::int64_t, std::int64_t>> build_rows(const UrnSpec& spec);

// Mirror of the scheme tracking black as white: rows reversed with columns
// exchanged, initial counts exchanged. An involution on valid specs.
UrnSpec swap_colors(const UrnSpec& spec);

enum class Regime { SmallIndex, CriticalHalf, LargeIndex, Triangular, GeneralizedPolya };

std::string to_string(Regime r);

struct UrnClass {
  Rational lambda;     // urn index m*(a_{m-1}-a_m)/sigma, always <= 1
  Regime regime;
  bool deterministic;  // lambda == 0: the composition evolves deterministically
};

// Classify a validated spec. Throws SpecError when a_m < 0 or b_0 < 0
// (no sampling scheme can make such rows tenable).
UrnClass classify(const UrnSpec& spec);

struct TenabilityResult {
  bool tenable;
  std::string explanation;  // names the first violated clause, or "tenable"
};

// Decide whether the drawing/replacement process can continue forever.
// Requires lambda != 0. Pure row/initial-count arithmetic; cross-validated
// against oracle::reachability_scan. The characterization assumes both colors
// start present (W0, B0 >= 1): a zero-ball start forces the first sample
// composition and can park the chain before any violating row fires.
TenabilityResult check_tenable(const UrnSpec& spec);

// Outcome of one step: k white balls in the sample and the resulting deltas.
struct StepOutcome {
  std::uint32_t k;
  std::int64_t delta_white;
  std::int64_t delta_black;
};

// JSON object with keys m, sigma, a_m_minus_1, a_m, W0, B0, scheme ("M"/"R").
UrnSpec spec_from_json(const std::string& text);
std::string spec_to_json(const UrnSpec& spec);

}  // namespace polyurn
