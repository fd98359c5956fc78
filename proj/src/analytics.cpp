#include "polyurn/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polyurn::analytics {

Rational pool_ratio(const UrnSpec& spec) {
  Rational t(static_cast<long>(spec.T0()), static_cast<long>(spec.sigma));
  t.canonicalize();
  return t;
}

Rational urn_index(const UrnSpec& spec) {
  Rational l(static_cast<long>(spec.m) * static_cast<long>(spec.h()),
             static_cast<long>(spec.sigma));
  l.canonicalize();
  return l;
}

namespace {

// g is a product of positive factors only when t + lambda > 0.
void require_g_defined(const UrnSpec& spec) {
  if (spec.T0() + static_cast<std::int64_t>(spec.m) * spec.h() <= 0)
    throw SpecError("normalization sequence undefined: T0 + m(a_{m-1}-a_m) <= 0");
}

double ratio_to_double(const Int& num, const Int& den) {
  long en = 0, ed = 0;
  const double dn = mpz_get_d_2exp(&en, num.get_mpz_t());
  const double dd = mpz_get_d_2exp(&ed, den.get_mpz_t());
  return std::ldexp(dn / dd, static_cast<int>(en - ed));
}

}  // namespace

ExactGSequence::ExactGSequence(const UrnSpec& spec) {
  require_g_defined(spec);
  const Rational t = pool_ratio(spec);
  const Rational lam = urn_index(spec);
  // Factor for step j (1-based):
  //   num *= s*(q*(j-1) + p),  den *= q*s*(j-1) + p*s + q*r
  // where t = p/q and lambda = r/s in lowest terms.
  const Int p = t.get_num(), q = t.get_den();
  const Int r = lam.get_num(), s = lam.get_den();
  t_num_ = s * p;          // j-independent parts
  t_den_ = p * s + q * r;
  step_num_ = s * q;       // slope in (j-1)
  step_den_ = q * s;
}

void ExactGSequence::advance() {
  const Int j(static_cast<unsigned long>(n_));  // j-1 with 1-based j
  num_ *= t_num_ + step_num_ * j;
  den_ *= t_den_ + step_den_ * j;
  ++n_;
}

double ExactGSequence::value() const { return ratio_to_double(num_, den_); }

Rational ExactGSequence::reduced() const {
  Rational out;
  mpq_set_num(out.get_mpq_t(), num_.get_mpz_t());
  mpq_set_den(out.get_mpq_t(), den_.get_mpz_t());
  out.canonicalize();
  return out;
}

Rational g_exact(const UrnSpec& spec, std::uint64_t n) {
  if (n > kExactCostGuard)
    throw GuardError("exact g evaluation capped at n = " + std::to_string(kExactCostGuard));
  ExactGSequence seq(spec);
  while (seq.n() < n) seq.advance();
  return seq.reduced();
}

double log_g(const UrnSpec& spec, std::uint64_t n) {
  require_g_defined(spec);
  const double t = to_double(pool_ratio(spec));
  const double lam = to_double(urn_index(spec));
  double sum = 0, comp = 0;  // Kahan
  for (std::uint64_t j = 1; j <= n; ++j) {
    const double term = std::log1p(-lam / (static_cast<double>(j) - 1 + t + lam));
    const double y = term - comp;
    const double tmp = sum + y;
    comp = (tmp - sum) - y;
    sum = tmp;
  }
  return sum;
}

double g_float(const UrnSpec& spec, std::uint64_t n) { return std::exp(log_g(spec, n)); }

std::vector<double> g_float_at(const UrnSpec& spec, const std::vector<std::uint64_t>& ns) {
  require_g_defined(spec);
  const double t = to_double(pool_ratio(spec));
  const double lam = to_double(urn_index(spec));
  std::vector<double> out(ns.size());
  double sum = 0, comp = 0;
  std::uint64_t j = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    while (j < ns[i]) {
      ++j;
      const double term = std::log1p(-lam / (static_cast<double>(j) - 1 + t + lam));
      const double y = term - comp;
      const double tmp = sum + y;
      comp = (tmp - sum) - y;
      sum = tmp;
    }
    out[i] = std::exp(sum);
  }
  return out;
}

double gamma_ratio_q(const UrnSpec& spec) {
  const double t = to_double(pool_ratio(spec));
  const double tl = t + to_double(urn_index(spec));
  if (tl > 0) return std::exp(std::lgamma(tl) - std::lgamma(t));
  // Nonpositive arguments only arise for small-index schemes with strongly
  // negative index; poles give an infinite ratio (the n^L drift vanishes).
  if (tl == std::floor(tl)) return std::numeric_limits<double>::infinity();
  return std::tgamma(tl) / std::tgamma(t);
}

Rational mean_white_exact(const UrnSpec& spec, std::uint64_t n) {
  if (n > kExactCostGuard)
    throw GuardError("exact mean capped at n = " + std::to_string(kExactCostGuard));
  spec.validate();
  // E[W_j] = E[W_{j-1}] * (T_{j-1} + m h) / T_{j-1} + a_m, tracked unreduced.
  const std::int64_t mh = static_cast<std::int64_t>(spec.m) * spec.h();
  Int num(static_cast<long>(spec.W0)), den(1);
  for (std::uint64_t j = 0; j < n; ++j) {
    const Int T(static_cast<long>(spec.total_at(j)));
    num = num * (T + mh) + Int(static_cast<long>(spec.a_m)) * den * T;
    den *= T;
  }
  Rational out;
  mpq_set_num(out.get_mpq_t(), num.get_mpz_t());
  mpq_set_den(out.get_mpq_t(), den.get_mpz_t());
  out.canonicalize();
  return out;
}

namespace {

double mean_float_recurrence(const UrnSpec& spec, std::uint64_t n) {
  const double mh = static_cast<double>(spec.m) * static_cast<double>(spec.h());
  double e = static_cast<double>(spec.W0);
  for (std::uint64_t j = 0; j < n; ++j) {
    const double T = static_cast<double>(spec.total_at(j));
    e = e * (T + mh) / T + static_cast<double>(spec.a_m);
  }
  return e;
}

}  // namespace

double mean_white_float(const UrnSpec& spec, std::uint64_t n) {
  spec.validate();
  const Rational lam = urn_index(spec);
  const Rational t = pool_ratio(spec);
  if (lam == 1) {
    // a_m = 0 here; W0 (n sigma + T0) / T0.
    return static_cast<double>(spec.W0) *
           (static_cast<double>(spec.sigma) * static_cast<double>(n) +
            static_cast<double>(spec.T0())) /
           static_cast<double>(spec.T0());
  }
  if (spec.T0() + static_cast<std::int64_t>(spec.m) * spec.h() <= 0)
    return mean_float_recurrence(spec, n);
  const double zeta = to_double(Rational(spec.a_m) / (Rational(1) - lam));
  const double td = to_double(t);
  return zeta * (static_cast<double>(n) + td) +
         (static_cast<double>(spec.W0) - zeta * td) / g_float(spec, n);
}

std::vector<double> mean_white_float_at(const UrnSpec& spec,
                                        const std::vector<std::uint64_t>& ns) {
  spec.validate();
  const Rational lam = urn_index(spec);
  std::vector<double> out(ns.size());
  if (lam == 1) {
    for (std::size_t i = 0; i < ns.size(); ++i) {
      out[i] = static_cast<double>(spec.W0) *
               (static_cast<double>(spec.sigma) * static_cast<double>(ns[i]) +
                static_cast<double>(spec.T0())) /
               static_cast<double>(spec.T0());
    }
    return out;
  }
  if (spec.T0() + static_cast<std::int64_t>(spec.m) * spec.h() <= 0) {
    const double mh = static_cast<double>(spec.m) * static_cast<double>(spec.h());
    double e = static_cast<double>(spec.W0);
    std::uint64_t j = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      while (j < ns[i]) {
        const double T = static_cast<double>(spec.total_at(j));
        e = e * (T + mh) / T + static_cast<double>(spec.a_m);
        ++j;
      }
      out[i] = e;
    }
    return out;
  }
  const double zeta = to_double(Rational(spec.a_m) / (Rational(1) - lam));
  const double td = to_double(pool_ratio(spec));
  const std::vector<double> g = g_float_at(spec, ns);
  for (std::size_t i = 0; i < ns.size(); ++i)
    out[i] = zeta * (static_cast<double>(ns[i]) + td) +
             (static_cast<double>(spec.W0) - zeta * td) / g[i];
  return out;
}

double binomial_fourth_central(std::uint32_t m, double p) {
  const double q = 1 - p;
  const double mpq = static_cast<double>(m) * p * q;
  return 3 * mpq * mpq + mpq * (1 - 6 * p * q);
}

std::pair<UrnSpec, bool> normalize_triangular(const UrnSpec& spec) {
  if (spec.b(0) == 0 && spec.a_m != 0) return {swap_colors(spec), true};
  return {spec, false};
}

LimitConstants limit_constants(const UrnSpec& spec,
                               std::optional<TriangularLimitMoments> hint) {
  auto [s, swapped] = normalize_triangular(spec);
  const UrnClass cls = classify(s);
  if (cls.deterministic)
    throw SpecError("limit constants require lambda != 0");
  if (!check_tenable(s).tenable) throw SpecError("scheme is not tenable");
  const Rational lam = cls.lambda;
  if ((cls.regime == Regime::Triangular || cls.regime == Regime::GeneralizedPolya) &&
      lam < 0)
    throw SpecError("triangular constants require 0 < lambda <= 1");

  LimitConstants lc;
  lc.lambda = lam;
  lc.regime = cls.regime;
  lc.color_swapped = swapped;
  lc.pool_index_condition =
      s.T0() + static_cast<std::int64_t>(s.m) * s.h() > 0;
  lc.q = gamma_ratio_q(s);

  const double lamd = to_double(lam);
  const double td = to_double(pool_ratio(s));
  const double m = static_cast<double>(s.m);
  const double am = static_cast<double>(s.a_m);
  const double b0 = static_cast<double>(s.b(0));
  const double hd = static_cast<double>(s.h());
  const double w0 = static_cast<double>(s.W0);
  const double t0 = static_cast<double>(s.T0());
  const double sig = static_cast<double>(s.sigma);

  if (lam != 1) {
    Rational z = Rational(static_cast<long>(s.a_m)) / (Rational(1) - lam);
    z.canonicalize();
    lc.zeta = z;
    lc.theta = (w0 - to_double(z) * td) / lc.q;
  }

  switch (cls.regime) {
    case Regime::SmallIndex:
      lc.gamma1 = std::abs(lamd) / (1 - lamd) * std::sqrt(am * b0 / (m * (1 - 2 * lamd)));
      lc.ell_n = EllKind::One;
      break;
    case Regime::CriticalHalf:
      lc.gamma1 = std::sqrt(am * b0 / m);
      lc.ell_n = EllKind::LogN;
      break;
    case Regime::LargeIndex: {
      lc.alpha = (1 - lamd) / (lc.q * lamd) * std::sqrt(m * (2 * lamd - 1) / (am * b0));
      const double ex2 = am * b0 * lc.q * lc.q * lamd * lamd / (m * (1 - lamd) * (1 - lamd));
      lc.ex2_leading = ex2;
      lc.s2_leading = ex2 / (2 * lamd - 1);
      const double zs = to_double(*lc.zeta) / sig;  // limit of W_n / T_n
      lc.m4_leading = std::pow(lc.q, 4) * std::pow(hd, 4) *
                      binomial_fourth_central(s.m, zs);
      break;
    }
    case Regime::Triangular: {
      lc.beta = 1.0 / std::sqrt(hd * lc.q);
      lc.ex2_leading = sig * lc.q * lamd * lamd * w0 / m;
      lc.s2_leading = hd * lc.q * w0;  // = ex2 / lambda
      lc.m4_leading = hd * hd * hd * lamd * std::pow(lc.q, 3) * w0;
      break;
    }
    case Regime::GeneralizedPolya: {
      lc.beta = std::sqrt(m);
      if (hint) {
        lc.ex2_leading = t0 * t0 / m * hint->frac_var;
        lc.s2_leading = lc.ex2_leading;
        lc.m4_leading = std::pow(t0, 4) / std::pow(m, 4) * hint->bin4;
        lc.estimated_moments = true;
      }
      break;
    }
  }
  return lc;
}

// ---------------------------------------------------------------------------
// Conditional step moments.
// ---------------------------------------------------------------------------

namespace {

void require_reachable(const UrnSpec& spec, const StateRef& st) {
  const std::int64_t T = spec.total_at(st.n);
  if (st.W < 0 || st.W > T) throw SpecError("state outside [0, T_n]");
  const std::int64_t base =
      spec.W0 + static_cast<std::int64_t>(st.n) * spec.a_m;
  const std::int64_t off = st.W - base;
  if (spec.h() == 0) {
    if (off != 0) throw SpecError("state off the deterministic path");
    return;
  }
  if (off % spec.h() != 0) throw SpecError("state off the reachable lattice");
  const std::int64_t j = off / spec.h();
  if (j < 0 || j > static_cast<std::int64_t>(spec.m) * static_cast<std::int64_t>(st.n))
    throw SpecError("state off the reachable lattice");
}

struct StepPieces {
  Rational g_next;   // g_{n+1}
  Rational y_hat;    // drift-compensated offset entering every atom
  Rational t;        // T_n
};

// Exact ingredients shared by the closed second moment and the step law.
StepPieces step_pieces_exact(const UrnSpec& spec, const StateRef& st) {
  StepPieces p;
  p.t = Rational(static_cast<long>(spec.total_at(st.n)));
  const Rational lam = urn_index(spec);
  const Rational tr = pool_ratio(spec);
  // g_n / g_{n+1} = (n + t + L) / (n + t).
  const Rational npt = Rational(static_cast<long>(st.n)) + tr;
  const Rational ratio = (npt + lam) / npt;
  Rational e_n(0), e_next(0);
  if (spec.a_m != 0) {
    e_n = mean_white_exact(spec, st.n);
    e_next = mean_white_exact(spec, st.n + 1);
  }
  p.y_hat = (Rational(1) - ratio) * (Rational(static_cast<long>(st.W)) - e_n) + e_n -
            e_next + Rational(static_cast<long>(spec.a_m));
  p.g_next = g_exact(spec, st.n + 1);
  return p;
}

}  // namespace

ConditionalMoments conditional_moments(const UrnSpec& spec, const StateRef& st) {
  spec.validate();
  require_reachable(spec, st);
  const StepPieces p = step_pieces_exact(spec, st);
  const Rational W(static_cast<long>(st.W));
  const Rational mh(static_cast<long>(spec.m) * static_cast<long>(spec.h()));
  const Rational h(static_cast<long>(spec.h()));
  const Rational mr(static_cast<long>(spec.m));

  Rational branch;
  if (spec.scheme == Sampling::WithoutReplacement)
    branch = (mr - 1) / (p.t - 1) * (W - 1) + 1;
  else
    branch = (mr - 1) / p.t * W + 1;

  ConditionalMoments out;
  out.ev = p.g_next * (p.y_hat + mh * W / p.t);
  out.second = p.g_next * p.g_next *
               (p.y_hat * p.y_hat + 2 * p.y_hat * W * mh / p.t +
                mr * h * h / p.t * W * branch);
  return out;
}

namespace {

struct StepPiecesFloat {
  double g_next;
  double y_hat;
  double t;
};

StepPiecesFloat step_pieces_float(const UrnSpec& spec, const StateRef& st) {
  StepPiecesFloat p;
  p.t = static_cast<double>(spec.total_at(st.n));
  const double lam = to_double(urn_index(spec));
  const double tr = to_double(pool_ratio(spec));
  const double npt = static_cast<double>(st.n) + tr;
  const double ratio = (npt + lam) / npt;
  double e_n = 0, e_next = 0;
  if (spec.a_m != 0) {
    const std::vector<double> e = mean_white_float_at(spec, {st.n, st.n + 1});
    e_n = e[0];
    e_next = e[1];
  }
  p.y_hat = (1 - ratio) * (static_cast<double>(st.W) - e_n) + e_n - e_next +
            static_cast<double>(spec.a_m);
  p.g_next = g_float(spec, st.n + 1);
  return p;
}

// Exact step probabilities at (W, n) pushed to double; m <= 16 keeps the
// products well inside double range.
std::vector<double> step_probs_float(const UrnSpec& spec, const StateRef& st) {
  const double T = static_cast<double>(spec.total_at(st.n));
  const double W = static_cast<double>(st.W);
  const double B = T - W;
  const std::uint32_t m = spec.m;
  std::vector<double> p(m + 1, 0.0);
  if (spec.scheme == Sampling::WithReplacement) {
    for (std::uint32_t k = 0; k <= m; ++k) {
      double v = to_double(Rational(binomial(m, k)));
      for (std::uint32_t i = 0; i < k; ++i) v *= W / T;
      for (std::uint32_t i = 0; i < m - k; ++i) v *= B / T;
      p[k] = v;
    }
  } else {
    for (std::uint32_t k = 0; k <= m; ++k) {
      if (W < k || B < m - k) continue;
      double v = to_double(Rational(binomial(m, k)));
      for (std::uint32_t i = 0; i < k; ++i) v *= (W - i);
      for (std::uint32_t i = 0; i < m - k; ++i) v *= (B - i);
      for (std::uint32_t i = 0; i < m; ++i) v /= (T - i);
      p[k] = v;
    }
  }
  return p;
}

}  // namespace

double conditional_second_float(const UrnSpec& spec, const StateRef& st) {
  spec.validate();
  require_reachable(spec, st);
  const StepPiecesFloat p = step_pieces_float(spec, st);
  const std::vector<double> probs = step_probs_float(spec, st);
  const double h = static_cast<double>(spec.h());
  double s = 0;
  for (std::uint32_t k = 0; k <= spec.m; ++k) {
    const double x = p.g_next * (p.y_hat + h * k);
    s += probs[k] * x * x;
  }
  return s;
}

double conditional_fourth_float(const UrnSpec& spec, const StateRef& st) {
  spec.validate();
  require_reachable(spec, st);
  const StepPiecesFloat p = step_pieces_float(spec, st);
  const std::vector<double> probs = step_probs_float(spec, st);
  const double h = static_cast<double>(spec.h());
  double s = 0;
  for (std::uint32_t k = 0; k <= spec.m; ++k) {
    const double x = p.g_next * (p.y_hat + h * k);
    s += probs[k] * x * x * x * x;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Triangular transition mass.
// ---------------------------------------------------------------------------

namespace {

void require_triangular_mass(const UrnSpec& spec) {
  if (spec.a_m != 0) throw SpecError("transition mass requires a_m = 0");
  if (spec.h() < 1) throw SpecError("transition mass requires a_{m-1} >= 1");
}

}  // namespace

std::uint64_t transition_mass_min_n(const UrnSpec& spec) {
  require_triangular_mass(spec);
  // Most negative bracket over k is at k = m(n+1), i = 0.
  const std::int64_t mh = static_cast<std::int64_t>(spec.m) * spec.h();
  for (std::uint64_t n = 0; n < (1ull << 40); ++n) {
    const std::int64_t slack =
        spec.total_at(n) - spec.W0 - mh * (static_cast<std::int64_t>(n) + 1);
    if (slack >= 0) return n;
    if (spec.sigma <= mh && n > 0) break;  // slack cannot recover
  }
  throw SpecError("no horizon makes all transition-mass terms nonnegative");
}

TransitionMassForms transition_mass_forms(const UrnSpec& spec, std::uint64_t k,
                                          std::uint64_t n) {
  spec.validate();
  require_triangular_mass(spec);
  if (k > static_cast<std::uint64_t>(spec.m) * (n + 1))
    throw SpecError("k out of range [0, m(n+1)]");
  if (n < transition_mass_min_n(spec))
    throw SpecError("n below the first horizon with nonnegative terms");

  const Int T(static_cast<long>(spec.total_at(n)));
  const Int W0(static_cast<long>(spec.W0));
  const Int h(static_cast<long>(spec.h()));
  const std::uint32_t m = spec.m;
  const bool with_repl = spec.scheme == Sampling::WithReplacement;

  Int num = 0;
  const std::uint32_t imax = std::min<std::uint64_t>(k, m);
  for (std::uint32_t i = 0; i <= imax; ++i) {
    const Int w = W0 + Int(static_cast<long>(k - i)) * h;
    const Int bpool = T - w;
    Int term = binomial(m, i);
    if (with_repl)
      term *= int_pow(w, i) * int_pow(bpool, m - i);
    else
      term *= falling_factorial(w, i) * falling_factorial(bpool, m - i);
    num += term;
  }
  const Int den = with_repl ? int_pow(T, m) : falling_factorial(T, m);

  TransitionMassForms out;
  Rational sum;
  mpq_set_num(sum.get_mpq_t(), num.get_mpz_t());
  mpq_set_den(sum.get_mpq_t(), den.get_mpz_t());
  sum.canonicalize();
  out.summed = sum;

  if (k >= m) {
    // m! / pool(m) * sum_l (-1)^{m-l} c_{m-l} pool(l) / l!  with
    // pool(l) = T^l, c_p = h^p with replacement, and pool(l) = T falling l,
    // c_p = h (h+1)^{p-1} without replacement (c_0 = 1).
    Int fact_m = 1;
    for (std::uint32_t i = 2; i <= m; ++i) fact_m *= i;
    Rational acc(0);
    Int fact_l = 1;
    for (std::uint32_t l = 0; l <= m; ++l) {
      if (l >= 2) fact_l *= l;
      Int top = with_repl ? int_pow(T, l) : falling_factorial(T, l);
      if (with_repl)
        top *= int_pow(h, m - l);
      else if (l < m)
        top *= h * int_pow(h + 1, m - l - 1);
      if ((m - l) % 2 == 1) top = -top;
      Rational part;
      mpq_set_num(part.get_mpq_t(), top.get_mpz_t());
      mpq_set_den(part.get_mpq_t(), fact_l.get_mpz_t());
      part.canonicalize();
      acc += part;
    }
    Rational scale;
    mpq_set_num(scale.get_mpq_t(), fact_m.get_mpz_t());
    mpq_set_den(scale.get_mpq_t(), den.get_mpz_t());
    scale.canonicalize();
    out.closed = scale * acc;
  }
  return out;
}

Rational transition_mass(const UrnSpec& spec, std::uint64_t k, std::uint64_t n) {
  return transition_mass_forms(spec, k, n).summed;
}

double asymptotic_s2(const UrnSpec& spec, std::uint64_t n,
                     std::optional<double> limit_hint) {
  auto [s, swapped] = normalize_triangular(spec);
  (void)swapped;
  const UrnClass cls = classify(s);
  const double lam = to_double(cls.lambda);
  const double nd = static_cast<double>(n);
  if (cls.regime == Regime::LargeIndex) {
    const LimitConstants lc = limit_constants(s);
    return *lc.s2_leading * std::pow(nd, 1 - 2 * lam);
  }
  if (cls.regime == Regime::Triangular) {
    const LimitConstants lc = limit_constants(s);
    return *lc.s2_leading * std::pow(nd, -lam);
  }
  if (cls.regime == Regime::GeneralizedPolya) {
    if (!limit_hint)
      throw SpecError("lambda = 1 tail variance needs a limit-moment hint");
    const double t0 = static_cast<double>(s.T0());
    return t0 * t0 / static_cast<double>(s.m) * *limit_hint / nd;
  }
  throw SpecError("tail variance expansion covers large-index and triangular schemes");
}

double proxy_variance_fraction(const UrnSpec& spec, std::uint64_t n, std::uint64_t N) {
  if (N <= n) throw SpecError("proxy horizon must exceed n");
  auto [s, swapped] = normalize_triangular(spec);
  (void)swapped;
  const UrnClass cls = classify(s);
  const double lam = to_double(cls.lambda);
  const double r = static_cast<double>(n) / static_cast<double>(N);
  switch (cls.regime) {
    case Regime::LargeIndex: return 1 - std::pow(r, 2 * lam - 1);
    case Regime::Triangular: return 1 - std::pow(r, lam);
    case Regime::GeneralizedPolya: return 1 - r;
    default:
      throw SpecError("limit proxies only exist for convergent martingale regimes");
  }
}

}  // namespace polyurn::analytics
