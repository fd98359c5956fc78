#pragma once

#include <cstdint>

namespace polyurn::sim {

// Counter-based generator: output i of a stream is mix64(key + i * GAMMA).
// Streams are cheap to fork by key, so replicas are order-independent and
// runs are bit-reproducible across platforms and thread counts.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : state_(key) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Unbiased uniform draw from [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t cutoff = (0 - n) % n;  // 2^64 mod n
    std::uint64_t r = next();
    while (r < cutoff) r = next();
    return r % n;
  }

 private:
  std::uint64_t state_;
};

// Stream key for one replica of one run.
inline CounterRng replica_rng(std::uint64_t master_seed, std::uint64_t replica) {
  const std::uint64_t key =
      CounterRng::mix64(master_seed ^ CounterRng::mix64(replica + 0x9e3779b97f4a7c15ULL));
  return CounterRng(key);
}

}  // namespace polyurn::sim
