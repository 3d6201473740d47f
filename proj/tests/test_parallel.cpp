#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "wickflow/parallel.hpp"
#include "wickflow/rng.hpp"

using namespace wickflow;

TEST_CASE("replica_map preserves replica order") {
  for (int workers : {1, 3, 8}) {
    std::vector<double> out =
        replica_map<double>(100, workers, [](std::size_t i) { return static_cast<double>(i * i); });
    REQUIRE(out.size() == 100);
    for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(out[i] == static_cast<double>(i * i));
  }
}

TEST_CASE("replica_map results are bit-identical across worker counts") {
  auto job = [](std::size_t i) {
    RngStream rng(derive_seed(7, i));
    double acc = 0.0;
    for (int k = 0; k < 50; ++k) acc += std::sin(rng.gaussian()) * std::exp(-0.1 * k);
    return acc;
  };
  std::vector<double> one = replica_map<double>(64, 1, job);
  for (int workers : {2, 4, 16}) {
    std::vector<double> many = replica_map<double>(64, workers, job);
    REQUIRE(one == many);
  }
}

TEST_CASE("replica_map propagates worker exceptions") {
  REQUIRE_THROWS_AS(replica_map<double>(16, 4,
                                        [](std::size_t i) -> double {
                                          if (i == 11) throw std::runtime_error("boom");
                                          return 0.0;
                                        }),
                    std::runtime_error);
}

TEST_CASE("resolve_workers precedence") {
  REQUIRE(resolve_workers(5) == 5);
  setenv("WICKFLOW_WORKERS", "7", 1);
  REQUIRE(resolve_workers(0) == 7);
  REQUIRE(resolve_workers(2) == 2);
  unsetenv("WICKFLOW_WORKERS");
  REQUIRE(resolve_workers(0) >= 1);
}
