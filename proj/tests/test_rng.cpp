#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wickflow/rng.hpp"

using namespace wickflow;

TEST_CASE("derive_seed is deterministic and collision free over 1e6 replicas") {
  REQUIRE(derive_seed(42, 7) == derive_seed(42, 7));
  std::vector<std::uint64_t> seen;
  seen.reserve(1000000);
  for (std::uint64_t i = 0; i < 1000000; ++i) seen.push_back(derive_seed(20260825, i));
  std::sort(seen.begin(), seen.end());
  REQUIRE(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("derive_seed avalanches on master bit flips") {
  RngStream probe(99);
  double flipped_bits = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto master = static_cast<std::uint64_t>(probe.uniform() * 1e18);
    int bit = static_cast<int>(probe.uniform() * 64.0) & 63;
    auto replica = static_cast<std::uint64_t>(probe.uniform() * 1e6);
    std::uint64_t a = derive_seed(master, replica);
    std::uint64_t b = derive_seed(master ^ (std::uint64_t{1} << bit), replica);
    flipped_bits += static_cast<double>(std::popcount(a ^ b));
  }
  REQUIRE(flipped_bits / (64.0 * trials) >= 0.30);
}

TEST_CASE("uniform stream stays in [0,1) and differs across seeds") {
  RngStream a(1), b(2);
  bool all_equal = true;
  for (int i = 0; i < 1000; ++i) {
    double u = a.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    if (u != b.uniform()) all_equal = false;
  }
  REQUIRE_FALSE(all_equal);
}

TEST_CASE("gaussian stream has standard moments") {
  RngStream rng(314159);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    s1 += g;
    s2 += g * g;
  }
  double mean = s1 / n;
  double var = s2 / n - mean * mean;
  REQUIRE(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(std::abs(var - 1.0) <= 4.0 * std::sqrt(2.0 / n));
}
