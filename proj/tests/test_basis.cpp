#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "wickflow/basis.hpp"

using namespace wickflow;

TEST_CASE("gram residuals vanish for every family") {
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  REQUIRE(gram_residual(BasisSpec{}, 16) <= 1e-10);
  REQUIRE(gram_residual(plane, 32) <= 1e-10);
  REQUIRE(gram_residual(BasisSpec{BasisKind::fourier_circle}, 33) <= 1e-10);
  REQUIRE(gram_residual(scaled_basis(plane, 4.0), 32) <= 1e-10);
  REQUIRE(gram_residual(bridge_strip_basis(1.0), 48) <= 1e-10);
}

TEST_CASE("strip stays orthonormal under shear and odd horizons") {
  REQUIRE(gram_residual(bridge_strip_basis(2.5, 0.7, 1e-3, 4.0, 0.9), 40) <= 1e-10);
}

TEST_CASE("plane enumeration is the inverse Cantor pairing") {
  REQUIRE(plane_pair(1, PlaneOrdering::diagonal).a == 0);
  REQUIRE(plane_pair(1, PlaneOrdering::diagonal).b == 0);
  REQUIRE(plane_pair(2, PlaneOrdering::diagonal).a == 1);
  REQUIRE(plane_pair(2, PlaneOrdering::diagonal).b == 0);
  REQUIRE(plane_pair(3, PlaneOrdering::diagonal).b == 1);
  std::set<std::pair<int, int>> seen;
  for (std::size_t j = 1; j <= 210; ++j) {
    PlanePair p = plane_pair(j, PlaneOrdering::diagonal);
    REQUIRE(p.a >= 0);
    REQUIRE(p.b >= 0);
    seen.insert({p.a, p.b});
  }
  // 210 = 20th triangular number: the pairs tile the anti-diagonals exactly.
  REQUIRE(seen.size() == 210);
  for (const auto& [a, b] : seen) REQUIRE(a + b <= 19);
}

TEST_CASE("strip enumeration levels are non-decreasing") {
  auto pairs = strip_pairs(100, 4.0);
  double prev = -1.0;
  for (const PlanePair& p : pairs) {
    double level = 4.0 * p.a + p.b;
    REQUIRE(level >= prev);
    prev = level;
  }
}

TEST_CASE("hermite functions carry the gaussian normalization") {
  REQUIRE(std::abs(hermite_function(0, 0.0) - 0.7511255444649425) <= 1e-15);
  // psi_1(0) = 0: odd function.
  REQUIRE(hermite_function(1, 0.0) == 0.0);
}

TEST_CASE("strip elements vanish outside the time slab") {
  BasisSpec strip = bridge_strip_basis(1.0);
  std::vector<double> below{0.3, -0.1}, above{0.3, 1.1}, inside{0.3, 0.5};
  REQUIRE(eval_basis(strip, 1, below) == 0.0);
  REQUIRE(eval_basis(strip, 1, above) == 0.0);
  REQUIRE(eval_basis(strip, 1, inside) != 0.0);
}

TEST_CASE("basis kind names round trip") {
  for (BasisKind k : {BasisKind::hermite_line, BasisKind::hermite_plane_tensor,
                      BasisKind::fourier_circle, BasisKind::scaled_plane,
                      BasisKind::bridge_strip}) {
    REQUIRE(basis_kind_from_name(basis_kind_name(k)) == k);
  }
  REQUIRE_THROWS(basis_kind_from_name("no-such-basis"));
}

TEST_CASE("scaled basis requires a plane base and positive N") {
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  REQUIRE_THROWS(scaled_basis(BasisSpec{}, 2.0));
  REQUIRE_THROWS(scaled_basis(plane, 0.0));
}
