#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "wickflow/mathutil.hpp"

using namespace wickflow;

TEST_CASE("compensated sum survives cancellation") {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  REQUIRE(s.value() == 1.0);
}

TEST_CASE("compensated sum matches long double reference") {
  std::vector<double> xs;
  double v = 0.1;
  for (int i = 0; i < 20000; ++i) {
    xs.push_back(v);
    v = std::fmod(v * 1.000037 + 0.01, 1.0);
  }
  long double ref = 0.0L;
  for (double x : xs) ref += x;
  double got = compensated_total(xs);
  REQUIRE(std::abs(got - static_cast<double>(ref)) <= 1e-9);
}

TEST_CASE("log_sum_exp handles extreme offsets") {
  std::vector<double> ls{-1000.0, -1000.0};
  REQUIRE(std::abs(log_sum_exp(ls) - (-1000.0 + std::log(2.0))) <= 1e-12);
  std::vector<double> single{3.5};
  REQUIRE(log_sum_exp(single) == 3.5);
}

TEST_CASE("inverse normal cdf round trip") {
  REQUIRE(inverse_normal_cdf(0.5) == 0.0);
  for (double p : {0.001, 0.1, 0.3, 0.7, 0.9, 0.999}) {
    double x = inverse_normal_cdf(p);
    REQUIRE(std::abs(normal_cdf(x) - p) <= 1e-9);
  }
}

TEST_CASE("mean and variance") {
  std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  MeanVar mv = mean_and_variance(xs);
  REQUIRE(mv.mean == 2.5);
  // Unbiased sample variance of {1,2,3,4} is 5/3.
  REQUIRE(std::abs(mv.var - 5.0 / 3.0) <= 1e-14);
}
