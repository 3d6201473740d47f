#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "wickflow/polymers.hpp"

using namespace wickflow;

namespace {

ChainModel two_state(double t = 1.0) {
  ChainModel m;
  m.K = {{-1.0, 1.0}, {1.0, -1.0}};
  m.start = 0;
  m.horizon = t;
  return m;
}

}  // namespace

TEST_CASE("matrix exponential of the symmetric two-state generator") {
  auto P = chain_transition_exact(two_state());
  REQUIRE(std::abs(P[0][1] - 0.4323323583816937) <= 1e-12);
  REQUIRE(std::abs(P[0][0] + P[0][1] - 1.0) <= 1e-12);
  REQUIRE(std::abs(P[0][1] - P[1][0]) <= 1e-14);
}

TEST_CASE("generator validation rejects malformed rates") {
  ChainModel bad = two_state();
  bad.K[0][1] = -2.0;  // negative off-diagonal rate
  REQUIRE_THROWS(chain_transition_exact(bad));
  ChainModel unbalanced = two_state();
  unbalanced.K[0][0] = -0.5;  // row no longer sums to zero
  REQUIRE_THROWS(chain_transition_exact(unbalanced));
}

TEST_CASE("joint chain MC reproduces the transition row") {
  ChainModel m = two_state();
  auto exact = chain_transition_exact(m);
  ChainRowEstimate est = chain_row_joint_mc(m, 20000, 17);
  for (std::size_t y = 0; y < 2; ++y)
    REQUIRE(std::abs(est.by_state[y].mean - exact[0][y]) <= 4.0 * est.by_state[y].std_err);
  REQUIRE(std::abs(est.total.mean - 1.0) <= 4.0 * est.total.std_err);
}

TEST_CASE("lattice site bookkeeping") {
  LatticeModel m(2);
  REQUIRE(m.site_count() == 5);
  REQUIRE(m.path_count() == 4);
  REQUIRE(m.site_index(1, 1) == 1);
  REQUIRE(m.site_index(2, 0) == 3);
  REQUIRE_THROWS(m.site_index(1, 0));   // parity
  REQUIRE_THROWS(m.site_index(3, 1));   // beyond the horizon
  REQUIRE_THROWS(LatticeModel(21));     // enumeration bound
}

TEST_CASE("exact lattice partition for one step") {
  LatticeModel m(1);
  std::vector<double> xi{0.4, -0.2};
  double expect = 0.5 * (std::exp(xi[0] - 0.5) + std::exp(xi[1] - 0.5));
  REQUIRE(std::abs(lattice_partition_exact(m, xi) - expect) <= 1e-15);
}

TEST_CASE("lattice partition has mean one under Gauss-Hermite") {
  for (int n = 0; n <= 5; ++n)
    REQUIRE(std::abs(lattice_mean_partition_quadrature(LatticeModel(n)) - 1.0) <= 1e-10);
}

TEST_CASE("lattice shift identity is exact and hits the pair-site value") {
  LatticeModel m(2);
  const std::size_t s1 = m.site_index(1, 1);
  const std::size_t s2 = m.site_index(2, 0);
  LatticePoly pair{{LatticePoly::Term{1.0, {{s1, 1}, {s2, 1}}}}};
  auto [lhs, rhs] = lattice_shift_identity_exact(m, pair);
  REQUIRE(std::abs(lhs - rhs) <= 1e-12);
  // Both routes count the single up-down path: probability 1/4.
  REQUIRE(std::abs(rhs - 0.25) <= 1e-12);
}

TEST_CASE("lattice polynomial degree is capped") {
  LatticeModel m(3);
  const std::size_t s = m.site_index(1, 1);
  LatticePoly deep{{LatticePoly::Term{1.0, {{s, 5}}}}};
  REQUIRE_THROWS(lattice_shift_identity_exact(m, deep));
}

TEST_CASE("lattice occupation shift agrees with the exact partition in mean") {
  LatticeOccupationShift shift(3);
  const LatticeModel& m = shift.model();
  std::vector<double> xi(m.site_count());
  for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = 0.1 * static_cast<double>(j) - 0.25;
  MCEstimate z = partition_Zn(shift, xi, 4000, 19);
  REQUIRE(std::abs(z.mean - lattice_partition_exact(m, xi)) <= 4.0 * z.std_err);
}
