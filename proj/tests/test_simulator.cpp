#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "polyurn/analytics.hpp"
#include "polyurn/oracle.hpp"
#include "polyurn/simulator.hpp"
#include "test_util.hpp"

using namespace polyurn;

TEST_CASE("degenerate sample compositions") {
  sim::CounterRng rng(1);
  const UrnSpec s = testutil::large_m();
  for (int i = 0; i < 50; ++i) {
    CHECK(sim::draw_white_count(0, 10, s, rng) == 0);
    CHECK(sim::draw_white_count(10, 10, s, rng) == 2);
  }
  const auto out = sim::draw_sample(3, 6, s, rng);
  CHECK(out.delta_white + out.delta_black == s.sigma);
}

TEST_CASE("hypergeometric frequencies") {
  sim::CounterRng rng(sim::CounterRng::mix64(7));
  const UrnSpec s = testutil::large_m();
  const int draws = 1000000;
  int ones = 0;
  for (int i = 0; i < draws; ++i) ones += sim::draw_white_count(3, 6, s, rng) == 1;
  const double p = 3.0 / 5.0;
  const double se = std::sqrt(p * (1 - p) / draws);
  CHECK(std::abs(static_cast<double>(ones) / draws - p) < 4 * se);
}

TEST_CASE("deterministic index zero evolution") {
  UrnSpec flat{2, 6, 2, 2, 1, 1, Sampling::WithReplacement};
  const auto t = sim::run(flat, 50, {10, 25}, 99);
  for (const auto& pt : t.points)
    CHECK(pt.W == 1 + 2 * static_cast<std::int64_t>(pt.n));
}

TEST_CASE("replaying a seed is bit-identical, independent of threads") {
  const UrnSpec s = testutil::classical_polya();
  const auto a = sim::run(s, 5000, {10, 100, 1000}, 12345);
  const auto b = sim::run(s, 5000, {10, 100, 1000}, 12345);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].W == b.points[i].W);
    CHECK(a.points[i].Y == b.points[i].Y);
  }

  const auto r1 = sim::run_replicas(s, {100, 1000}, 500, 777, 1);
  const auto r2 = sim::run_replicas(s, {100, 1000}, 500, 777, 2);
  CHECK(r1.W == r2.W);
}

TEST_CASE("runtime tenability violations name the step") {
  UrnSpec bad{1, 1, -2, 0, 3, 3, Sampling::WithReplacement};
  CHECK_THROWS_WITH_AS(sim::run(bad, 200, {}, 3).points.size(),
                       doctest::Contains("tenability violated"), SpecError);
}

TEST_CASE("sample mean tracks the exact mean") {
  const std::uint64_t n = 1000, R = 100000;
  const auto rr = sim::run_replicas(testutil::large_m(), {n}, R, 31337, 0);
  double sum = 0, sumsq = 0;
  for (std::uint64_t r = 0; r < R; ++r) {
    const double w = static_cast<double>(rr.w(r, 0));
    sum += w;
    sumsq += w * w;
  }
  const double mean = sum / R;
  const double sd = std::sqrt((sumsq - R * mean * mean) / (R - 1));
  const double exact = analytics::mean_white_float(testutil::large_m(), n);
  CHECK(std::abs(mean - exact) < 4 * sd / std::sqrt(static_cast<double>(R)));
}

TEST_CASE("Y is a martingale along checkpoints") {
  const std::uint64_t R = 100000;
  for (const UrnSpec& s : {testutil::large_m(), testutil::triangular_r()}) {
    const auto rr = sim::run_replicas(s, {10, 11, 100, 101, 1000, 1001}, R, 555, 0);
    for (std::size_t c = 0; c < 6; c += 2) {
      double sum = 0, sumsq = 0;
      for (std::uint64_t r = 0; r < R; ++r) {
        const double d = rr.y(r, c + 1) - rr.y(r, c);
        sum += d;
        sumsq += d * d;
      }
      const double mean = sum / R;
      const double sd = std::sqrt((sumsq - R * mean * mean) / (R - 1));
      CHECK(std::abs(mean) < 4 * sd / std::sqrt(static_cast<double>(R)));
    }
  }
}

TEST_CASE("simulated law matches the enumeration oracle in total variation") {
  const std::uint64_t R = 1000000, n = 6;
  for (const UrnSpec& s : {testutil::classical_polya(), testutil::large_r()}) {
    const auto rr = sim::run_replicas(s, {n}, R, 2718, 0);
    std::map<std::int64_t, std::uint64_t> counts;
    for (std::uint64_t r = 0; r < R; ++r) ++counts[rr.w(r, 0)];
    const auto exact = oracle::exact_distribution(s, n);
    double tv = 0;
    for (const auto& [w, p] : exact.support) {
      const double emp =
          counts.count(w) ? static_cast<double>(counts[w]) / static_cast<double>(R) : 0.0;
      tv += std::abs(emp - to_double(p));
      counts.erase(w);
    }
    for (const auto& [w, c] : counts) {
      (void)w;
      tv += static_cast<double>(c) / static_cast<double>(R);  // off-support mass
    }
    CHECK(tv / 2 < 0.01);
  }
}

TEST_CASE("scaled differences stay within a constant envelope") {
  // Empirical counterpart of |X_n| <= K n^{-lambda}: the running sup of
  // n^lambda |X_n| never exceeds 10x its level at n = 100.
  const UrnSpec s = testutil::triangular_m();
  const double lam = to_double(analytics::urn_index(s));
  std::vector<std::uint64_t> ns;
  for (std::uint64_t n = 1; n <= 5000; ++n) ns.push_back(n);
  const auto rr = sim::run_replicas(s, ns, 100, 424242, 0);
  double at100 = 0, sup = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    for (std::size_t c = 1; c < ns.size(); ++c) {
      const double x = rr.y(r, c) - rr.y(r, c - 1);
      const double scaled = std::pow(static_cast<double>(ns[c]), lam) * std::abs(x);
      if (ns[c] == 100) at100 = std::max(at100, scaled);
      if (ns[c] > 100) sup = std::max(sup, scaled);
    }
  }
  CHECK(sup < 10 * at100);
}

TEST_CASE("tail sum guards") {
  CHECK_THROWS_AS(sim::tail_sums(testutil::large_m(), 100, 99, 10, 1), SpecError);
  CHECK_THROWS_AS(sim::tail_sums(testutil::large_m(), 100, 500, 10, 1), SpecError);
  CHECK_THROWS_AS(sim::tail_sums(testutil::small_m(), 100, 1000, 10, 1), SpecError);
}

TEST_CASE("classical Polya limit proxy is uniform on (0, 2)") {
  const std::uint64_t N = 10000, R = 10000;
  const auto samples = sim::tail_sums(testutil::classical_polya(), 100, N, R, 31415, 0);
  std::vector<double> ws(R);
  for (std::uint64_t r = 0; r < R; ++r) {
    CHECK(samples[r].w_hat > 0);
    CHECK(samples[r].w_hat < 2);
    CHECK(samples[r].eta_hat > 0);
    ws[r] = samples[r].w_hat;
  }
  std::sort(ws.begin(), ws.end());
  double d = 0;
  for (std::uint64_t i = 0; i < R; ++i) {
    const double f = ws[i] / 2.0;
    d = std::max(d, std::abs(f - static_cast<double>(i) / R));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / R - f));
  }
  CHECK(d < 0.02);
}

TEST_CASE("tail sums carry unit variance after normalization") {
  const std::uint64_t n = 2000, N = 20000, R = 5000;
  const UrnSpec s = testutil::large_m();
  const auto lc = analytics::limit_constants(s);
  const auto samples = sim::tail_sums(s, n, N, R, 161803, 0);
  const double kept = analytics::proxy_variance_fraction(s, n, N);
  double sum = 0, sumsq = 0;
  for (const auto& ts : samples) {
    const double z =
        *lc.alpha * std::pow(static_cast<double>(n), 2.0 / 3 - 0.5) * ts.value;
    sum += z;
    sumsq += z * z;
  }
  const double var = (sumsq - sum * sum / R) / (R - 1);
  CHECK(std::abs(var / kept - 1.0) < 0.10);
}
