#include "polyurn/urn.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <set>

#include "json.hpp"

namespace polyurn {

std::string to_string(Sampling s) {
  return s == Sampling::WithoutReplacement ? "M" : "R";
}

Sampling sampling_from_string(const std::string& s) {
  if (s == "M") return Sampling::WithoutReplacement;
  if (s == "R") return Sampling::WithReplacement;
  throw SpecError("unknown sampling scheme '" + s + "' (expected \"M\" or \"R\")");
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::SmallIndex: return "SmallIndex";
    case Regime::CriticalHalf: return "CriticalHalf";
    case Regime::LargeIndex: return "LargeIndex";
    case Regime::Triangular: return "Triangular";
    case Regime::GeneralizedPolya: return "GeneralizedPolya";
  }
  return "?";
}

void UrnSpec::validate() const {
  if (m < 1) throw SpecError("m must be >= 1");
  if (sigma < 1) throw SpecError("sigma must be >= 1");
  if (W0 < 0 || B0 < 0) throw SpecError("initial counts must be nonnegative");
  if (scheme == Sampling::WithoutReplacement) {
    if (T0() < static_cast<std::int64_t>(m))
      throw SpecError("model M needs T0 >= m");
  } else if (T0() < 1) {
    throw SpecError("model R needs T0 >= 1");
  }
  // Standing assumptions for the degenerate-column cases.
  if (a_m == 0 && W0 < 1)
    throw SpecError("a_m = 0 requires W0 >= 1");
  if (b(0) == 0 && B0 < 1)
    throw SpecError("b_0 = 0 requires B0 >= 1");
}

std::vector<std::pair<std::int64_t, std::int64_t>> build_rows(const UrnSpec& spec) {
  std::vector<std::pair<std::int64_t, std::int64_t>> rows;
  rows.reserve(spec.m + 1);
  for (std::uint32_t k = 0; k <= spec.m; ++k) rows.emplace_back(spec.a(k), spec.b(k));
  return rows;
}

UrnSpec swap_colors(const UrnSpec& spec) {
  if (spec.m < 1) throw SpecError("m must be >= 1");
  UrnSpec out = spec;
  // New row k is (b_{m-k}, a_{m-k}); the affine difference h is unchanged,
  // so the new parameters are a'_{m-1} = b_1 and a'_m = b_0.
  out.a_m_minus_1 = spec.b(1);
  out.a_m = spec.b(0);
  out.W0 = spec.B0;
  out.B0 = spec.W0;
  out.validate();
  return out;
}

UrnClass classify(const UrnSpec& spec) {
  spec.validate();
  Rational lambda(static_cast<long>(spec.m) * static_cast<long>(spec.h()),
                  static_cast<long>(spec.sigma));
  lambda.canonicalize();

  const std::int64_t am = spec.a_m;
  const std::int64_t b0 = spec.b(0);
  UrnClass out;
  out.lambda = lambda;
  out.deterministic = (spec.h() == 0);

  if (am == 0 && b0 == 0) {
    out.regime = Regime::GeneralizedPolya;  // lambda = 1 here
    return out;
  }
  if (am == 0 || b0 == 0) {
    out.regime = Regime::Triangular;
    return out;
  }
  if (am < 0 || b0 < 0)
    throw SpecError("a_m or b_0 negative: scheme is not tenable under either model");

  const Rational half = make_rational(1, 2);
  if (lambda < half)
    out.regime = Regime::SmallIndex;
  else if (lambda == half)
    out.regime = Regime::CriticalHalf;
  else
    out.regime = Regime::LargeIndex;  // 1/2 < lambda < 1 whenever a_m, b_0 >= 1
  return out;
}

namespace {

// gcd over the nonzero entries; zero when all entries vanish.
std::int64_t column_gcd(const UrnSpec& spec, bool white_column) {
  std::int64_t g = 0;
  for (std::uint32_t k = 0; k <= spec.m; ++k) {
    const std::int64_t v = white_column ? spec.a(k) : spec.b(k);
    g = std::gcd(g, std::llabs(v));
  }
  return g;
}

// Model M residue clause for one color: entry = a_0 (resp. b_m),
// start = W0 (resp. B0), g = gcd of that column.
bool model_m_boundary_ok(std::int64_t entry, std::int64_t start, std::int64_t g,
                         std::int64_t m, std::string* why, const char* color) {
  if (entry >= -m) return true;
  if (g == 0) throw SpecError("all-zero replacement column: gcd undefined");
  if (entry < -m - g + 1) {
    *why = std::string(color) + " boundary entry " + std::to_string(entry) +
           " < -(m + gcd - 1) = " + std::to_string(-m - g + 1);
    return false;
  }
  // Removal dips below m are impossible iff the start count avoids the
  // residues of the window [m, -entry-1] modulo the column gcd.
  std::set<std::int64_t> forbidden;
  for (std::int64_t r = m; r <= -entry - 1; ++r) forbidden.insert(((r % g) + g) % g);
  const std::int64_t s = ((start % g) + g) % g;
  if (forbidden.count(s)) {
    *why = std::string(color) + " start count " + std::to_string(start) +
           " mod " + std::to_string(g) + " falls in the removable window [" +
           std::to_string(m) + ", " + std::to_string(-entry - 1) + "]";
    return false;
  }
  return true;
}

}  // namespace

TenabilityResult check_tenable(const UrnSpec& spec) {
  spec.validate();
  if (spec.h() == 0)
    throw SpecError("tenability test requires lambda != 0");

  const std::int64_t m = spec.m;
  if (spec.scheme == Sampling::WithReplacement) {
    for (std::uint32_t k = 1; k <= spec.m; ++k)
      if (spec.a(k) < 0)
        return {false, "a_" + std::to_string(k) + " = " + std::to_string(spec.a(k)) +
                           " < 0 under model R"};
    for (std::uint32_t k = 0; k < spec.m; ++k)
      if (spec.b(k) < 0)
        return {false, "b_" + std::to_string(k) + " = " + std::to_string(spec.b(k)) +
                           " < 0 under model R"};
    const std::int64_t a0 = spec.a(0);
    if (a0 < 0) {
      if (spec.W0 % (-a0) != 0)
        return {false, "a_0 = " + std::to_string(a0) + " does not divide W0 = " +
                           std::to_string(spec.W0)};
      if (spec.h() % (-a0) != 0)
        return {false, "a_0 = " + std::to_string(a0) +
                           " does not divide a_{m-1} - a_m = " + std::to_string(spec.h())};
    }
    const std::int64_t bm = spec.b(spec.m);
    if (bm < 0) {
      if (spec.B0 % (-bm) != 0)
        return {false, "b_m = " + std::to_string(bm) + " does not divide B0 = " +
                           std::to_string(spec.B0)};
      if (spec.h() % (-bm) != 0)
        return {false, "b_m = " + std::to_string(bm) +
                           " does not divide a_{m-1} - a_m = " + std::to_string(spec.h())};
    }
    return {true, "tenable"};
  }

  // Model M.
  for (std::uint32_t k = 1; k <= spec.m; ++k)
    if (spec.a(k) < -(m - static_cast<std::int64_t>(k)))
      return {false, "a_" + std::to_string(k) + " = " + std::to_string(spec.a(k)) +
                         " < -(m-k) = " + std::to_string(-(m - static_cast<std::int64_t>(k)))};
  for (std::uint32_t k = 0; k < spec.m; ++k)
    if (spec.b(k) < -static_cast<std::int64_t>(k))
      return {false, "b_" + std::to_string(k) + " = " + std::to_string(spec.b(k)) +
                         " < -k = " + std::to_string(-static_cast<std::int64_t>(k))};
  std::string why;
  if (!model_m_boundary_ok(spec.a(0), spec.W0, column_gcd(spec, true), m, &why, "white"))
    return {false, why};
  if (!model_m_boundary_ok(spec.b(spec.m), spec.B0, column_gcd(spec, false), m, &why, "black"))
    return {false, why};
  return {true, "tenable"};
}

UrnSpec spec_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  UrnSpec s;
  s.m = j.at("m").get<std::uint32_t>();
  s.sigma = j.at("sigma").get<std::int64_t>();
  s.a_m_minus_1 = j.at("a_m_minus_1").get<std::int64_t>();
  s.a_m = j.at("a_m").get<std::int64_t>();
  s.W0 = j.at("W0").get<std::int64_t>();
  s.B0 = j.at("B0").get<std::int64_t>();
  s.scheme = sampling_from_string(j.at("scheme").get<std::string>());
  s.validate();
  return s;
}

std::string spec_to_json(const UrnSpec& spec) {
  nlohmann::json j;
  j["m"] = spec.m;
  j["sigma"] = spec.sigma;
  j["a_m_minus_1"] = spec.a_m_minus_1;
  j["a_m"] = spec.a_m;
  j["W0"] = spec.W0;
  j["B0"] = spec.B0;
  j["scheme"] = to_string(spec.scheme);
  return j.dump();
}

}  // namespace polyurn
