#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "wickflow/she.hpp"

using namespace wickflow;

TEST_CASE("heat kernels at the origin") {
  std::vector<double> origin2{0.0, 0.0}, origin1{0.0};
  REQUIRE(std::abs(heat_kernel(SheDim::planar, origin2, 1.0) - 0.15915494309189535) <= 1e-16);
  REQUIRE(std::abs(heat_kernel(SheDim::one_plus_one, origin1, 1.0) - 0.3989422804014327) <= 1e-16);
  REQUIRE(std::abs(heat_kernel(SheDim::planar, origin2, 0.5) - 2.0 * heat_kernel(SheDim::planar, origin2, 1.0)) <= 1e-15);
}

TEST_CASE("query validation") {
  SheQuery q;
  q.dimension = SheDim::planar;
  q.end_time = 0.0;
  REQUIRE_THROWS(validate_she_query(q));
  q.end_time = 1.0;
  q.end_point = {0.0};  // wrong dimension
  REQUIRE_THROWS(validate_she_query(q));
}

TEST_CASE("zeroth truncation is the heat kernel exactly") {
  SheQuery q;
  q.dimension = SheDim::planar;
  q.end_point = {0.3, -0.2};
  q.end_time = 0.7;
  q.n = 0;
  q.q_reps = 16;
  MCEstimate e = solve_wick(q, {});
  REQUIRE(e.mean == heat_kernel(SheDim::planar, q.end_point, 0.7));
  REQUIRE(e.std_err == 0.0);
}

TEST_CASE("flat field solution stays positive and below the kernel") {
  SheQuery q;
  q.dimension = SheDim::one_plus_one;
  q.start_point = {0.0};
  q.end_point = {0.0};
  q.end_time = 1.0;
  q.n = 8;
  q.q_reps = 512;
  q.seed = 4;
  std::vector<double> flat(8, 0.0);
  MCEstimate e = solve_wick(q, flat);
  REQUIRE(e.mean > 0.0);
  // At xi = 0 every weight is exp(-|m|^2/2) <= 1.
  REQUIRE(e.mean <= heat_kernel(SheDim::one_plus_one, q.end_point, 1.0));
}

TEST_CASE("log scale bookkeeping") {
  REQUIRE(std::abs(kpz_log_scale_factor(10.0, 1.0, 1.0) - 53.22152362619872) <= 1e-12);
  REQUIRE(std::abs(kpz_log_scale_factor(1.0, 1.0, 1.0) -
                   (0.5 * std::log(kTwoPi) + 0.5)) <= 1e-15);
}

TEST_CASE("chaos coefficient preconditions") {
  REQUIRE_THROWS(chaos_coefficient_1p1(2, 0.0, 0.5, 0.0, 1.0, 100, 1));
  REQUIRE_THROWS(chaos_coefficient_1p1(1, 0.0, 1.5, 0.0, 1.0, 100, 1));
}

TEST_CASE("chaos coefficient matches the kernel product") {
  ChaosCoefficient cc = chaos_coefficient_1p1(1, 0.0, 0.5, 0.0, 1.0, 6000, 8);
  double gap = std::abs(cc.marginal.mean - cc.kernel_product);
  REQUIRE(gap <= 0.05 * cc.kernel_product + 4.0 * cc.marginal.std_err);
  REQUIRE(std::abs(cc.kernel_product - 1.0 / kPi) <= 1e-14);
}

TEST_CASE("coupling experiment preconditions and gap decay") {
  std::vector<double> bad{0.5};
  REQUIRE_THROWS(kpz_coupling_experiment(bad, 4, 10, 1));
  std::vector<double> Ns{2.0, 8.0};
  auto rows = kpz_coupling_experiment(Ns, 4, 400, 3);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].d_N > rows[1].d_N);
  REQUIRE(std::abs(rows[1].log_scale - kpz_log_scale_factor(8.0, 1.0, 1.0)) <= 1e-12);
}

TEST_CASE("squeezed bridge variance run is sane at a mild nu") {
  std::vector<double> nus{0.5};
  auto rows = alpha_variance_convergence(nus, 0.0, 16, 500, 6);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].oracle == 1.0);
  REQUIRE(rows[0].alpha_sq.mean > 0.05);
  REQUIRE(rows[0].alpha_sq.mean < 3.0);
  std::vector<double> bad{1.5};
  REQUIRE_THROWS(alpha_variance_convergence(bad, 0.0, 16, 10, 1));
}
