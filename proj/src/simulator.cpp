#include "polyurn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "polyurn/analytics.hpp"

namespace polyurn::sim {

int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::uint32_t draw_white_count(std::int64_t W, std::int64_t T, const UrnSpec& spec,
                               CounterRng& rng) {
  if (W < 0 || W > T) throw SpecError("impossible state: W outside [0, T]");
  std::uint32_t k = 0;
  if (spec.scheme == Sampling::WithoutReplacement) {
    if (T < static_cast<std::int64_t>(spec.m))
      throw SpecError("model M cannot draw: T < m");
    std::uint64_t pool = static_cast<std::uint64_t>(T);
    std::uint64_t whites = static_cast<std::uint64_t>(W);
    for (std::uint32_t i = 0; i < spec.m; ++i) {
      if (rng.below(pool) < whites) {
        ++k;
        --whites;
      }
      --pool;
    }
  } else {
    if (T < 1) throw SpecError("model R cannot draw: T < 1");
    const std::uint64_t pool = static_cast<std::uint64_t>(T);
    const std::uint64_t whites = static_cast<std::uint64_t>(W);
    for (std::uint32_t i = 0; i < spec.m; ++i)
      if (rng.below(pool) < whites) ++k;
  }
  return k;
}

StepOutcome draw_sample(std::int64_t W, std::int64_t T, const UrnSpec& spec,
                        CounterRng& rng) {
  const std::uint32_t k = draw_white_count(W, T, spec, rng);
  const std::int64_t dw = spec.increment(k);
  return {k, dw, spec.sigma - dw};
}

double CheckpointPlan::y_of(std::size_t checkpoint, std::int64_t W) const {
  if (!has_y) return std::numeric_limits<double>::quiet_NaN();
  return g[checkpoint] * (static_cast<double>(W) - e[checkpoint]);
}

CheckpointPlan make_plan(const UrnSpec& spec, std::vector<std::uint64_t> ns) {
  spec.validate();
  if (spec.m > kMaxSampleSize)
    throw SpecError("simulation capped at m <= " + std::to_string(kMaxSampleSize));
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  CheckpointPlan plan;
  plan.spec = spec;
  plan.ns = std::move(ns);
  plan.inc.resize(spec.m + 1);
  for (std::uint32_t k = 0; k <= spec.m; ++k) plan.inc[k] = spec.increment(k);
  plan.has_y = spec.T0() + static_cast<std::int64_t>(spec.m) * spec.h() > 0;
  if (spec.a_m == 0) {
    plan.e.assign(plan.ns.size(), 0.0);
  } else {
    plan.e = analytics::mean_white_float_at(spec, plan.ns);
  }
  if (plan.has_y) {
    plan.g = analytics::g_float_at(spec, plan.ns);
  } else {
    plan.g.assign(plan.ns.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return plan;
}

namespace {

// One path to the last checkpoint; W written into out[0..C).
void run_single(const CheckpointPlan& plan, CounterRng rng, std::int64_t* out) {
  const UrnSpec& s = plan.spec;
  std::int64_t W = s.W0;
  std::int64_t T = s.T0();
  std::uint64_t step = 0;
  for (std::size_t c = 0; c < plan.ns.size(); ++c) {
    const std::uint64_t target = plan.ns[c];
    while (step < target) {
      const std::uint32_t k = draw_white_count(W, T, s, rng);
      W += plan.inc[k];
      T += s.sigma;
      ++step;
      if (W < 0 || W > T)
        throw SpecError("tenability violated at step " + std::to_string(step) +
                        ": W = " + std::to_string(W));
    }
    out[c] = W;
  }
}

}  // namespace

Trajectory run(const UrnSpec& spec, std::uint64_t horizon,
               std::vector<std::uint64_t> checkpoints, std::uint64_t seed) {
  checkpoints.push_back(horizon);
  checkpoints.erase(
      std::remove_if(checkpoints.begin(), checkpoints.end(),
                     [horizon](std::uint64_t n) { return n > horizon; }),
      checkpoints.end());
  const CheckpointPlan plan = make_plan(spec, std::move(checkpoints));

  std::vector<std::int64_t> w(plan.ns.size());
  run_single(plan, replica_rng(seed, 0), w.data());

  Trajectory t;
  t.spec = spec;
  t.seed = seed;
  t.horizon = horizon;
  t.points.reserve(plan.ns.size());
  for (std::size_t c = 0; c < plan.ns.size(); ++c)
    t.points.push_back({plan.ns[c], w[c], plan.y_of(c, w[c])});
  return t;
}

ReplicaRun run_replicas(const UrnSpec& spec, std::vector<std::uint64_t> checkpoints,
                        std::uint64_t replicas, std::uint64_t seed, int threads) {
  ReplicaRun run;
  run.plan = make_plan(spec, std::move(checkpoints));
  run.replicas = replicas;
  run.seed = seed;
  const std::size_t C = run.plan.ns.size();
  run.W.resize(replicas * C);

  const int nthreads =
      static_cast<int>(std::min<std::uint64_t>(effective_threads(threads), replicas));
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&](std::uint64_t lo, std::uint64_t hi) {
    try {
      for (std::uint64_t r = lo; r < hi; ++r)
        run_single(run.plan, replica_rng(seed, r), run.W.data() + r * C);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (nthreads <= 1) {
    worker(0, replicas);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    const std::uint64_t chunk = (replicas + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const std::uint64_t lo = chunk * static_cast<std::uint64_t>(t);
      const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, replicas);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return run;
}

std::vector<TailSumSample> tail_sums(const UrnSpec& spec, std::uint64_t n,
                                     std::uint64_t N, std::uint64_t replicas,
                                     std::uint64_t seed, int threads) {
  if (N <= n) throw SpecError("proxy horizon N must exceed n");
  if (N < 10 * n) throw SpecError("proxy-quality guard: N >= 10 n required");
  auto [s, swapped] = analytics::normalize_triangular(spec);
  (void)swapped;
  const UrnClass cls = classify(s);
  if (cls.regime != Regime::LargeIndex && cls.regime != Regime::Triangular &&
      cls.regime != Regime::GeneralizedPolya)
    throw SpecError("tail sums require a convergent martingale regime");
  if ((cls.regime == Regime::Triangular || cls.regime == Regime::GeneralizedPolya) &&
      cls.lambda <= 0)
    throw SpecError("triangular tail sums require lambda > 0");

  const ReplicaRun rr = run_replicas(s, {n, N}, replicas, seed, threads);
  const double t0 = static_cast<double>(s.T0());
  std::vector<TailSumSample> out(replicas);
  for (std::uint64_t r = 0; r < replicas; ++r) {
    TailSumSample& ts = out[r];
    ts.n = n;
    ts.N = N;
    const double yn = rr.y(r, 0);
    const double yN = rr.y(r, 1);
    ts.value = yn - yN;
    ts.w_hat = yN;
    if (cls.regime == Regime::Triangular) {
      ts.eta_hat = 1.0 / std::sqrt(std::max(yN, 1e-300));
    } else if (cls.regime == Regime::GeneralizedPolya) {
      ts.eta_hat = 1.0 / std::sqrt(std::max(yN * (t0 - yN), 1e-300));
    } else {
      ts.eta_hat = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

}  // namespace polyurn::sim
