#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "wickflow/milt.hpp"

using namespace wickflow;

namespace {

PathShiftConfig motion_law(std::size_t steps = 128) {
  PathShiftConfig cfg;
  cfg.law = LawKind::motion;
  cfg.dim = 2;
  cfg.start = {0.0, 0.0};
  cfg.drift = {0.0, 0.0};
  cfg.cov = {1.0, 1.0};
  cfg.horizon = 1.0;
  cfg.spacetime = false;
  cfg.steps = steps;
  return cfg;
}

}  // namespace

TEST_CASE("bridge moment closed form at frozen values") {
  REQUIRE(bridge_1p1_moment_exact(0, 1.0) == 1.0);
  REQUIRE(std::abs(bridge_1p1_moment_exact(1, 1.0) - 0.8862269254527580) <= 1e-14);
  REQUIRE(std::abs(bridge_1p1_moment_exact(2, 1.0) - 1.0) <= 1e-14);
  REQUIRE(std::abs(bridge_1p1_moment_exact(3, 1.0) - 1.3293403881791370) <= 1e-12);
  REQUIRE(std::abs(bridge_1p1_moment_exact(4, 1.0) - 2.0) <= 1e-13);
}

TEST_CASE("bridge moments scale as t^(k/2)") {
  for (int k = 1; k <= 4; ++k)
    REQUIRE(std::abs(bridge_1p1_moment_exact(k, 4.0) -
                     std::pow(2.0, k) * bridge_1p1_moment_exact(k, 1.0)) <= 1e-12);
}

TEST_CASE("phi norm identity and bounds") {
  REQUIRE(std::abs(phi_norm_sq(0.0, 1.0) - 1.0 / kTwoPi) <= 1e-8);
  REQUIRE(std::abs(phi_norm_sq(0.0, 2.0) - 2.0 * phi_norm_sq(0.0, 1.0)) <= 1e-8);
  double v1 = phi_norm_sq(1.0, 1.0);
  double v10 = phi_norm_sq(10.0, 1.0);
  REQUIRE(v1 < phi_norm_sq(0.0, 1.0));
  REQUIRE(v10 < v1);
  REQUIRE(v10 <= 0.035355);
}

TEST_CASE("levy moment bound frozen values") {
  REQUIRE(std::abs(levy_moment_bound(1, 1.0, 1.0 / kTwoPi) - 1.1760048029281298) <= 1e-12);
  REQUIRE(std::abs(levy_moment_bound(2, 2.0, 2.0 / kTwoPi) - 1.3829872965100294) <= 1e-12);
  REQUIRE(std::abs(levy_moment_bound(3, 3.0, 3.0 / kTwoPi) - 2.1685329374458455) <= 1e-12);
  REQUIRE(std::abs(levy_moment_bound(0, 1.5, 0.3) - std::exp(3.0)) <= 1e-12);
}

TEST_CASE("cross alpha closed form") {
  REQUIRE(std::abs(expected_cross_alpha(1.0, 2.0) - 0.2206356001526516) <= 1e-15);
  REQUIRE(std::abs(expected_cross_alpha(0.5, 1.0) - 0.1103178000763258) <= 1e-15);
  REQUIRE(expected_cross_alpha(1e-13, 1.0) <= 1e-9);
  REQUIRE_THROWS(expected_cross_alpha(2.0, 1.0));
}

TEST_CASE("alpha_n is the truncated inner product") {
  std::vector<double> ma{2.0, 1.0, -3.0}, mb{2.0, 0.5, 10.0};
  REQUIRE(alpha_n(ma, mb, 1) == 4.0);
  REQUIRE(alpha_n(ma, mb, 2) == 4.5);
  REQUIRE(alpha_n(ma, mb, 3) == alpha_n(mb, ma, 3));
}

TEST_CASE("pair moments reject bad arguments") {
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  PathShiftConfig law = motion_law();
  REQUIRE_THROWS(alpha_pair_moments(law, law, plane, 16, 0, 100, 1));
  REQUIRE_THROWS(alpha_pair_moments(law, law, plane, 16, 7, 100, 1));
  PathShiftConfig st = law;
  st.dim = 1;
  st.spacetime = true;
  REQUIRE_THROWS(alpha_pair_moments(law, st, plane, 16, 1, 100, 1));
}

TEST_CASE("motion pair moments are positive and labeled") {
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  PathShiftConfig law = motion_law();
  auto moments = alpha_pair_moments(law, law, plane, 32, 2, 2000, 5);
  REQUIRE(moments.size() == 2);
  REQUIRE(moments[0].label == "alpha_moment_k1");
  REQUIRE(moments[1].label == "alpha_moment_k2");
  REQUIRE(moments[0].mean > 0.0);
  REQUIRE(moments[1].mean > 0.0);
  // Truncated means sit below the full-intersection mean.
  REQUIRE(moments[0].mean <= expected_cross_alpha(1.0, 2.0) + 4.0 * moments[0].std_err);
}

TEST_CASE("adapted projection has orthonormal columns and is worker invariant") {
  PathShiftConfig law = motion_law(64);
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  AdaptedProjection proj = train_adapted_projection(law, plane, 32, 8, 200, 9, 1);
  REQUIRE(proj.V.size() == 32 * 8);
  for (std::size_t a = 0; a < 8; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < 32; ++i) dot += proj.V[a * 32 + i] * proj.V[b * 32 + i];
      REQUIRE(std::abs(dot - (a == b ? 1.0 : 0.0)) <= 1e-10);
    }
  AdaptedProjection proj3 = train_adapted_projection(law, plane, 32, 8, 200, 9, 3);
  REQUIRE(proj.V == proj3.V);

  auto m1 = alpha_projected_moments(law, proj, 2, 300, 11, 1);
  auto m3 = alpha_projected_moments(law, proj, 2, 300, 11, 3);
  REQUIRE(m1[0].mean == m3[0].mean);
  REQUIRE(m1[1].std_err == m3[1].std_err);
  REQUIRE(m1[0].label == "alpha_projected_k1");
}

TEST_CASE("centered dyadic self intersection has mean zero") {
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  DyadicGamma g = self_intersection_gamma(motion_law(), plane, 16, 2, 600, 600, 31);
  // The centering pool doubles the variance of the mean.
  REQUIRE(std::abs(g.estimate.mean) <= 4.0 * std::sqrt(2.0) * g.estimate.std_err);
  REQUIRE(g.gammas.size() == 600);
  REQUIRE_THROWS(self_intersection_gamma(motion_law(), plane, 16, 0, 10, 10, 1));
}
