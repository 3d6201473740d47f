#pragma once

// Counter-based random stream. Every variate is a pure function of
// (seed, counter), so replicas regenerate bit-exactly from their seed alone
// and parallel execution needs no shared generator state. Gaussians come from
// the inverse CDF, keeping the stream position independent of variate values
// (no rejection steps).

#include <cstdint>

#include "wickflow/mathutil.hpp"

namespace wickflow {

namespace detail {
// SplitMix64 finalizer: full-avalanche 64-bit mix, bijective on uint64.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;  // odd
}  // namespace detail

// Per-replica seed: avalanche of (master XOR odd-constant * replica).
// replica -> master ^ kGolden*replica is a bijection on uint64 (odd
// multiplier), and mix64 is a bijection, so distinct replicas never collide.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica) {
  return detail::mix64(master ^ (detail::kGolden * replica));
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return detail::mix64(seed_ + (++counter_) * detail::kGolden); }

  // Uniform on the open interval (0,1): 53 random bits centered in the cell,
  // so 0 and 1 are unreachable and the inverse CDF is always finite.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double gaussian() { return inverse_normal_cdf(uniform()); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace wickflow
