#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polyurn/rational.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::analytics {

inline constexpr std::uint64_t kExactCostGuard = 100000;

// T0/sigma as an exact rational.
Rational pool_ratio(const UrnSpec& spec);
// Urn index as an exact rational (m * (a_{m-1} - a_m) / sigma).
Rational urn_index(const UrnSpec& spec);

// ---------------------------------------------------------------------------
// Normalization sequence g_n: g_0 = 1, g_n / g_{n-1} = (n-1+t) / (n-1+t+L)
// with t = T0/sigma and L the urn index. Defined when t + L > 0.
// ---------------------------------------------------------------------------

// Incremental exact evaluation as an unreduced integer fraction. Advancing is
// one small multiply per side, so sweeping n = 1..10^4 is cheap; use this in
// preference to repeated g_exact calls.
class ExactGSequence {
 public:
  explicit ExactGSequence(const UrnSpec& spec);
  void advance();
  std::uint64_t n() const { return n_; }
  const Int& num() const { return num_; }
  const Int& den() const { return den_; }
  double value() const;
  Rational reduced() const;

 private:
  std::uint64_t n_ = 0;
  Int num_ = 1, den_ = 1;
  Int t_num_, t_den_;      // t = t_num/t_den
  Int step_num_, step_den_;  // per-step linear coefficients
};

Rational g_exact(const UrnSpec& spec, std::uint64_t n);  // GuardError past cost guard
double log_g(const UrnSpec& spec, std::uint64_t n);
double g_float(const UrnSpec& spec, std::uint64_t n);
// One sweep over sorted checkpoint indices.
std::vector<double> g_float_at(const UrnSpec& spec, const std::vector<std::uint64_t>& sorted_ns);

// Q = Gamma(t+L) / Gamma(t), evaluated via log-Gamma differences.
double gamma_ratio_q(const UrnSpec& spec);

// ---------------------------------------------------------------------------
// Means. E[W_n] follows the one-step affine recurrence
// E[W_n] = E[W_{n-1}] * (T_{n-1} + m*h) / T_{n-1} + a_m exactly.
// ---------------------------------------------------------------------------

Rational mean_white_exact(const UrnSpec& spec, std::uint64_t n);
double mean_white_float(const UrnSpec& spec, std::uint64_t n);
// Same sweep trick as g_float_at.
std::vector<double> mean_white_float_at(const UrnSpec& spec,
                                        const std::vector<std::uint64_t>& sorted_ns);

// ---------------------------------------------------------------------------
// Limit constants per regime.
// ---------------------------------------------------------------------------

enum class EllKind { One, LogN };

// Caller-supplied sample moments of the generalized-Polya limit L (lambda = 1),
// scaled by T0: frac_var = E[(L/T0)(1 - L/T0)], bin4 = E[r(m, L/T0)] where
// r(m,p) is the fourth central moment of a binomial(m,p).
struct TriangularLimitMoments {
  double frac_var = 0;
  double bin4 = 0;
};

// Exactly the regime-legal fields are populated.
struct LimitConstants {
  Rational lambda;
  Regime regime;
  bool color_swapped = false;  // analytics ran on swap_colors(spec)
  double q = 0;                // Gamma(t+L)/Gamma(t)
  std::optional<Rational> zeta;      // a_m / (1-L), lambda != 1
  std::optional<double> theta;       // n^L drift coefficient of E[W_n], lambda < 1
  std::optional<double> gamma1;      // small/critical CLT scale
  std::optional<EllKind> ell_n;      // small/critical
  std::optional<double> alpha;       // large-index tail-sum CLT scale
  std::optional<double> beta;        // triangular tail-sum CLT scale
  std::optional<double> s2_leading;  // coefficient of the tail variance sum
  std::optional<double> ex2_leading; // coefficient of E[X_{n+1}^2]
  std::optional<double> m4_leading;  // coefficient of E[X_{n+1}^4]
  bool estimated_moments = false;    // lambda = 1 fields built from sample hints
  // T0 + m(a_{m-1} - a_m) > 0; recorded, never enforced.
  bool pool_index_condition = true;
};

LimitConstants limit_constants(const UrnSpec& spec,
                               std::optional<TriangularLimitMoments> hint = std::nullopt);

// Fourth central moment of binomial(m, p).
double binomial_fourth_central(std::uint32_t m, double p);

// ---------------------------------------------------------------------------
// Conditional martingale-difference moments at a state (W at time n), with
// Y_n = g_n (W_n - e_n), e_n = 0 when a_m = 0 and E[W_n] otherwise.
// ---------------------------------------------------------------------------

struct StateRef {
  std::int64_t W;
  std::uint64_t n;
};

struct ConditionalMoments {
  Rational ev;      // exact zero for every reachable state
  Rational second;  // E[X_{n+1}^2 | W_n = W]
};

// Throws SpecError for states off the reachable lattice.
ConditionalMoments conditional_moments(const UrnSpec& spec, const StateRef& state);
double conditional_second_float(const UrnSpec& spec, const StateRef& state);
double conditional_fourth_float(const UrnSpec& spec, const StateRef& state);

// ---------------------------------------------------------------------------
// One-step transition mass s(k,n) for triangular schemes (a_m = 0): the
// probability of landing on lattice point W0 + k*a_{m-1} at time n+1 summed
// over the feasible predecessors. Closed form is k-independent for k >= m.
// ---------------------------------------------------------------------------

// Smallest n for which every bracketed term in the summed form is
// nonnegative; SpecError when no such n exists.
std::uint64_t transition_mass_min_n(const UrnSpec& spec);

struct TransitionMassForms {
  Rational summed;
  std::optional<Rational> closed;  // k >= m only
};

TransitionMassForms transition_mass_forms(const UrnSpec& spec, std::uint64_t k,
                                          std::uint64_t n);
Rational transition_mass(const UrnSpec& spec, std::uint64_t k, std::uint64_t n);

// Tail-variance expansion value at n for the regmine's power law; lambda = 1
// requires the limit hint.
double asymptotic_s2(const UrnSpec& spec, std::uint64_t n,
                     std::optional<double> limit_hint = std::nullopt);

// Variance kept by the finite proxy Y_N standing in for the martingale limit:
// multiply the tail-sum CLT statistic by 1/sqrt of this to land on unit
// variance. Regime read off the (normalized) spec.
double proxy_variance_fraction(const UrnSpec& spec, std::uint64_t n, std::uint64_t N);

// Spec normalized for analytics: swaps colors when b_0 = 0 != a_m.
std::pair<UrnSpec, bool> normalize_triangular(const UrnSpec& spec);

}  // namespace polyurn::analytics
