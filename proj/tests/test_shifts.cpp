#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <span>
#include <vector>

#include "wickflow/shifts.hpp"

using namespace wickflow;

TEST_CASE("deterministic shift gives a closed-form partition") {
  DeterministicShift shift({0.5, -1.0, 2.0});
  std::vector<double> xi{0.2, 0.4, -0.3};
  MCEstimate z = partition_Zn(shift, xi, 8, 1);
  double expect = std::exp(0.5 * 0.2 - 0.125 - 1.0 * 0.4 - 0.5 + 2.0 * -0.3 - 2.0);
  REQUIRE(std::abs(z.mean - expect) <= 1e-14);
  REQUIRE(z.std_err == 0.0);
}

TEST_CASE("point-mass prior matches the exponential martingale") {
  const double theta = 0.7;
  BayesPointMassShift shift(theta, 4);
  std::vector<double> xi{1.0, -0.5, 0.25, 2.0};
  double s = 0.0;
  for (double x : xi) s += x;
  MCEstimate z = partition_Zn(shift, xi, 16, 3);
  REQUIRE(std::abs(z.mean - std::exp(theta * s - 4 * theta * theta / 2.0)) <= 1e-12);
}

TEST_CASE("partition at n=0 is exactly one") {
  BayesPointMassShift shift(0.7, 4);
  MCEstimate z = partition_Zn(shift, {}, 8, 5);
  REQUIRE(z.mean == 1.0);
  MCEstimate res = mean_one_residual(shift, 0, 32, 8, 5);
  REQUIRE(res.mean == 0.0);
}

TEST_CASE("circle intersection exponential closed form") {
  REQUIRE(circle_intersection_exponential(0.0) == 1.0);
  REQUIRE(std::abs(circle_intersection_exponential(0.5) - 1.1803405990160962) <= 1e-12);
  for (double gamma : {0.25, 0.5, 0.65}) {
    double closed = circle_intersection_exponential(gamma);
    double quad = circle_intersection_quadrature(gamma);
    REQUIRE(std::abs(closed - quad) <= 1e-8);
  }
  REQUIRE_THROWS_AS(circle_intersection_exponential(1.0 / std::sqrt(2.0)), std::domain_error);
  REQUIRE_THROWS_AS(circle_intersection_quadrature(0.9), std::domain_error);
}

TEST_CASE("gmc circle second moment at small gamma") {
  const std::size_t n = 128;
  CircleGmcShift shift(0.25, n);
  auto [nested, paired] = second_moment(shift, n, 400, 7, 16, 1, 4000);
  double oracle = circle_intersection_exponential(0.25);
  REQUIRE(std::abs(paired.mean - oracle) <= 4.0 * paired.std_err);
  double gap = std::abs(nested.mean - paired.mean);
  double sigma = std::sqrt(nested.std_err * nested.std_err + paired.std_err * paired.std_err);
  REQUIRE(gap <= 4.0 * sigma);
}

TEST_CASE("truncation gap collapses for a full event and saturates for an empty one") {
  CircleGmcShift shift(0.3, 64);
  auto keep_all = [](const QDraw&) { return true; };
  TruncationGap full = truncation_gap(shift, keep_all, 64, 50, 20, 9);
  REQUIRE(full.gap.mean == 0.0);
  REQUIRE(full.q_complement == 0.0);

  auto keep_none = [](const QDraw&) { return false; };
  TruncationGap none = truncation_gap(shift, keep_none, 64, 50, 20, 9);
  REQUIRE(none.q_complement == 1.0);
  // |Z - 1| <= 2 Q(A^c) = 2 must hold with slack.
  REQUIRE(none.gap.mean <= 2.0 + 4.0 * none.gap.std_err);
}

TEST_CASE("polymer expectation of the constant is the partition itself") {
  DeterministicShift shift({0.5, -1.0});
  std::vector<double> xi{0.3, 0.9};
  MCEstimate z = partition_Zn(shift, xi, 8, 1);
  MCEstimate p =
      polymer_expectation(shift, xi, [](const QDraw&) { return 1.0; }, 8, 1);
  REQUIRE(std::abs(p.mean - z.mean) <= 1e-15);
}

TEST_CASE("shift identity residual centers at zero for a joint functional") {
  CircleGmcShift shift(0.3, 32);
  auto F = [](std::span<const double> xi, const QDraw& d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d.m.size(); ++j) s += xi[j] * d.m[j];
    return std::cos(s);
  };
  MCEstimate est = shift_identity_residual(shift, F, 2000, 16, 13);
  REQUIRE(std::abs(est.mean) <= 4.0 * est.std_err);
}

TEST_CASE("martingale increments telescope into the second moment") {
  CircleGmcShift shift(0.3, 16);
  auto incs = martingale_increments(shift, 16, 600, 21, 32);
  REQUIRE(incs.size() == 16);
  double partial = 1.0;
  double sigma = 0.0;
  for (const MCEstimate& q : incs) {
    partial += q.mean;
    sigma += q.std_err;
  }
  auto [nested, paired] = second_moment(shift, 16, 600, 22, 32, 1, 20000);
  REQUIRE(std::abs(paired.mean - partial) <= 4.0 * (paired.std_err + sigma));
}
