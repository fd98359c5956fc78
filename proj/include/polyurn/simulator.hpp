#pragma once

#include <cstdint>
#include <vector>

#include "polyurn/rng.hpp"
#include "polyurn/urn.hpp"

namespace polyurn::sim {

inline constexpr std::uint32_t kMaxSampleSize = 16;

// Number of white balls in one sample: m sequential draws without
// replacement (hypergeometric) or m Bernoulli(W/T) trials (binomial). Both
// are exact integer comparisons against uniform draws.
std::uint32_t draw_white_count(std::int64_t W, std::int64_t T, const UrnSpec& spec,
                               CounterRng& rng);

StepOutcome draw_sample(std::int64_t W, std::int64_t T, const UrnSpec& spec,
                        CounterRng& rng);

// Checkpoint data shared by every replica of a run: the sorted horizon list
// with the float normalization g_n and centering e_n (0 for a_m = 0 schemes,
// E[W_n] otherwise) at each entry.
struct CheckpointPlan {
  UrnSpec spec;
  std::vector<std::uint64_t> ns;  // strictly increasing
  std::vector<double> g;
  std::vector<double> e;
  std::vector<std::int64_t> inc;  // white increment by sample composition
  bool has_y = true;              // g defined for this spec

  double y_of(std::size_t checkpoint, std::int64_t W) const;
};

CheckpointPlan make_plan(const UrnSpec& spec, std::vector<std::uint64_t> ns);

struct Trajectory {
  UrnSpec spec;
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;
  struct Point {
    std::uint64_t n;
    std::int64_t W;
    double Y;
  };
  std::vector<Point> points;
};

// One path; records (n, W_n, Y_n) at the requested checkpoints (the horizon
// is appended when absent). Identical (spec, horizon, seed) give bit-identical
// output on any platform or thread count.
Trajectory run(const UrnSpec& spec, std::uint64_t horizon,
               std::vector<std::uint64_t> checkpoints, std::uint64_t seed);

// W_n for `replicas` independent paths at the plan's checkpoints, replicas
// in rows. Parallel over replicas; per-replica streams make the result
// independent of the partitioning.
struct ReplicaRun {
  CheckpointPlan plan;
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> W;  // replicas x ns.size(), row-major

  std::int64_t w(std::uint64_t replica, std::size_t checkpoint) const {
    return W[replica * plan.ns.size() + checkpoint];
  }
  double y(std::uint64_t replica, std::size_t checkpoint) const {
    return plan.y_of(checkpoint, w(replica, checkpoint));
  }
};

ReplicaRun run_replicas(const UrnSpec& spec, std::vector<std::uint64_t> checkpoints,
                        std::uint64_t replicas, std::uint64_t seed, int threads = 0);

// Martingale tail-sum observations Y_n - Y_N with the far horizon N standing
// in for the limit; for a_m = 0 schemes eta_hat carries the mixing factor
// estimated from the proxy.
struct TailSumSample {
  std::uint64_t n = 0;
  std::uint64_t N = 0;
  double value = 0;     // Y_n - Y_N
  double eta_hat = 0;   // NaN outside triangular regimes
  double w_hat = 0;     // limit proxy Y_N
};

std::vector<TailSumSample> tail_sums(const UrnSpec& spec, std::uint64_t n,
                                     std::uint64_t N, std::uint64_t replicas,
                                     std::uint64_t seed, int threads = 0);

int effective_threads(int requested);

}  // namespace polyurn::sim
