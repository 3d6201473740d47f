#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "wickflow/paths.hpp"
#include "wickflow/rng.hpp"

using namespace wickflow;

TEST_CASE("grids hit both endpoints and stay sorted") {
  for (auto kind : {GridKind::uniform, GridKind::graded}) {
    std::vector<double> g = make_grid(kind, 2.0, 64);
    REQUIRE(g.size() == 65);
    REQUIRE(g.front() == 0.0);
    REQUIRE(std::abs(g.back() - 2.0) <= 1e-15);
    for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g[i] > g[i - 1]);
  }
}

TEST_CASE("graded grid crowds the endpoints symmetrically") {
  std::vector<double> g = graded_grid(1.0, 128);
  REQUIRE(g[1] < 1.0 / 128.0);  // denser than uniform near the pin
  for (std::size_t i = 0; i < g.size(); ++i)
    REQUIRE(std::abs(g[i] + g[g.size() - 1 - i] - 1.0) <= 1e-12);
}

TEST_CASE("bridges are pinned at both ends") {
  PathSample s = sample_bridge(2, {0.5, -1.0}, {-0.25, 2.0}, 1.5, {1.0, 0.7}, 32, 11);
  REQUIRE(s.coord(0, 0) == 0.5);
  REQUIRE(s.coord(0, 1) == -1.0);
  REQUIRE(std::abs(s.coord(32, 0) - (-0.25)) <= 1e-12);
  REQUIRE(std::abs(s.coord(32, 1) - 2.0) <= 1e-12);
}

TEST_CASE("bridge midpoint variance matches t/4 within MC error") {
  const int reps = 20000;
  const std::vector<double> grid = uniform_grid(1.0, 16);
  PathSample s;
  double s2 = 0.0;
  for (int i = 0; i < reps; ++i) {
    sample_bridge_grid_into(s, 1, {0.0}, {0.0}, grid, {1.0}, derive_seed(5, i));
    double x = s.coord(8, 0);
    s2 += x * x;
  }
  double var = s2 / reps;
  // Var of the chi^2 mean: 2 var^2 / reps.
  REQUIRE(std::abs(var - 0.25) <= 4.0 * 0.25 * std::sqrt(2.0 / reps));
}

TEST_CASE("motion starts at its start point with independent increments") {
  PathSample s = sample_motion(1, {3.0}, {0.0}, 1.0, {1.0}, 64, 17);
  REQUIRE(s.coord(0, 0) == 3.0);
  const int reps = 20000;
  const std::vector<double> grid = uniform_grid(1.0, 8);
  PathSample p;
  double s2 = 0.0;
  for (int i = 0; i < reps; ++i) {
    sample_motion_grid_into(p, 1, {0.0}, {0.0}, grid, {1.0}, derive_seed(23, i));
    double x = p.coord(8, 0);
    s2 += x * x;
  }
  double var = s2 / reps;
  REQUIRE(std::abs(var - 1.0) <= 4.0 * std::sqrt(2.0 / reps));
}

TEST_CASE("occupation coordinates of a frozen path are exact trapezoids") {
  // A path parked at the origin: m_j = e_j(0,0) * t for every plane element.
  PathSample s;
  s.times = uniform_grid(1.0, 10);
  s.points.assign(2 * s.times.size(), 0.0);
  s.meta.dim = 2;
  s.meta.horizon = 1.0;
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  OccupationCoordinates oc = occupation_coords(s, plane, 4, false);
  std::vector<double> origin{0.0, 0.0};
  for (std::size_t j = 1; j <= 4; ++j)
    REQUIRE(std::abs(oc.m[j - 1] - eval_basis(plane, j, origin)) <= 1e-14);
}

TEST_CASE("chain paths occupy the full horizon") {
  std::vector<std::vector<double>> K{{-1.0, 1.0}, {1.0, -1.0}};
  PathSample s = sample_chain(K, 0, 3.0, 99);
  std::vector<double> occ = chain_occupation(s, 2);
  REQUIRE(std::abs(occ[0] + occ[1] - 3.0) <= 1e-12);
  REQUIRE(occ[0] >= 0.0);
  REQUIRE(occ[1] >= 0.0);
}

TEST_CASE("path diagnostics stay finite") {
  PathSample s = sample_motion(1, {0.0}, {0.0}, 1.0, {1.0}, 256, 31);
  REQUIRE(std::isfinite(holder_norm(s, 0.4)));
  REQUIRE(box_count(s, 0.1, 0.1) >= 1);
}
