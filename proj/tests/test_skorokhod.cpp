#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <span>
#include <vector>

#include "wickflow/skorokhod.hpp"

using namespace wickflow;

TEST_CASE("hermite polynomial values") {
  REQUIRE(hermite(0, 1.7) == 1.0);
  REQUIRE(hermite(1, 1.7) == 1.7);
  REQUIRE(hermite(4, 1.0) == -2.0);  // x^4 - 6x^2 + 3 at 1
  REQUIRE(std::abs(hermite(3, 2.0) - 2.0) <= 1e-12);
}

TEST_CASE("iterated integrals of one reproduce hermite") {
  for (std::size_t k = 0; k <= 8; ++k)
    for (int xi = -3; xi <= 3; ++xi)
      REQUIRE(std::abs(iterate_integral(k, xi) - hermite(k, xi)) <= 1e-9);
}

TEST_CASE("beta recursion closed form") {
  for (double beta : {0.5, 1.0, 2.0})
    for (std::size_t k = 0; k <= 8; ++k)
      for (int xi = -3; xi <= 3; ++xi) {
        double ref = std::pow(beta, static_cast<double>(k)) * hermite(k, 1.0 / beta + xi);
        REQUIRE(std::abs(wick_recursion(beta, k, xi) - ref) <= 1e-9);
      }
}

TEST_CASE("one-coordinate skorokhod of the square is the third hermite plus xi") {
  // S(xi^2) = xi^3 - 2 xi pointwise.
  Integrand g;
  g.n = 1;
  g.eval = [](std::span<const double> xi, std::span<double> o) { o[0] = xi[0] * xi[0]; };
  g.diag_jacobian = [](std::span<const double> xi, std::span<double> o) { o[0] = 2.0 * xi[0]; };
  for (double x : {-1.5, 0.0, 0.25, 2.0}) {
    std::vector<double> xi{x};
    REQUIRE(std::abs(skorokhod_finite(g, xi) - (x * x * x - 2.0 * x)) <= 1e-12);
  }
}

TEST_CASE("central differences track the analytic diagonal") {
  Integrand analytic;
  analytic.n = 2;
  analytic.eval = [](std::span<const double> xi, std::span<double> o) {
    o[0] = std::sin(xi[0]);
    o[1] = std::cos(xi[1]);
  };
  analytic.diag_jacobian = [](std::span<const double> xi, std::span<double> o) {
    o[0] = std::cos(xi[0]);
    o[1] = -std::sin(xi[1]);
  };
  Integrand numeric = analytic;
  numeric.strategy = DerivativeStrategy::central_difference;
  std::vector<double> xi{0.3, -1.1};
  REQUIRE(std::abs(skorokhod_finite(analytic, xi) - skorokhod_finite(numeric, xi)) <= 1e-8);
}

TEST_CASE("adjoint residual centers at zero") {
  Integrand g;
  g.n = 1;
  g.eval = [](std::span<const double> xi, std::span<double> o) { o[0] = xi[0] * xi[0]; };
  g.diag_jacobian = [](std::span<const double> xi, std::span<double> o) { o[0] = 2.0 * xi[0]; };
  TestFunctional f{[](std::span<const double> xi) { return std::cos(xi[0]); },
                   [](std::span<const double> xi, std::span<double> grad) {
                     grad[0] = -std::sin(xi[0]);
                   }};
  MCEstimate est = adjoint_residual(g, f, 20000, 2024);
  REQUIRE(std::abs(est.mean) <= 4.0 * est.std_err);
}

TEST_CASE("projection residual centers at zero") {
  Integrand g;
  g.n = 2;
  g.eval = [](std::span<const double> xi, std::span<double> o) {
    o[0] = xi[0] * xi[1];
    o[1] = std::sin(xi[0]) + xi[1];
  };
  g.diag_jacobian = [](std::span<const double> xi, std::span<double> o) {
    o[0] = xi[1];
    o[1] = 1.0;
  };
  MCEstimate est = projection_residual(g, 1, 4000, 77, 64);
  REQUIRE(std::abs(est.mean) <= 4.0 * est.std_err);
}
