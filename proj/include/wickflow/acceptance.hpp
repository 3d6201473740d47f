#pragma once

// The acceptance suite: one function per release criterion, each returning a
// pass/fail verdict plus the measured numbers behind it. Every tolerance and
// replica count is pinned here, not configurable, so a green run means the
// same thing everywhere. The CLI `acceptance` subcommand and the long test
// binary both drive run_acceptance().

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "wickflow/csv.hpp"
#include "wickflow/experiments.hpp"

namespace wickflow {

struct CriterionResult {
  int index = 0;
  std::string title;
  bool passed = true;
  std::vector<std::string> details;  // measured values, one line each
  std::vector<ResultRow> rows;
  double wall_ms = 0.0;
};

namespace detail {

inline void note(CriterionResult& c, const std::string& line) { c.details.push_back(line); }

inline void require(CriterionResult& c, bool ok, const std::string& line) {
  c.details.push_back(std::string(ok ? "ok   " : "FAIL ") + line);
  if (!ok) c.passed = false;
}

inline void absorb(CriterionResult& c, const ExperimentResult& r) {
  for (const ResultRow& row : r.rows) c.rows.push_back(row);
  for (const std::string& line : r.checks) c.details.push_back("  " + line);
  if (!r.passed) c.passed = false;
}

// Oracle constants, frozen after independent derivation. Each is the exact
// closed form evaluated to double precision.
inline constexpr double kSqrtPiHalf = 0.8862269254527580;       // sqrt(pi)/2
inline constexpr double kLog2OverPi = 0.2206356001526516;       // log(2)/pi
inline constexpr double kCircleExpHalf = 1.1803405990160962;    // 2G(-1/2)/(G(3/4)G(-1/4))
inline constexpr double kTwoStateCross = 0.4323323583816937;    // (1 - e^{-2})/2

}  // namespace detail

// 1. Iterated integrals and the beta recursion against Hermite closed forms.
inline CriterionResult criterion_hermite(std::uint64_t seed, int) {
  CriterionResult c{1, "Hermite exactness of iterated integrals"};
  detail::Stopwatch sw;
  ExperimentConfig cfg;
  cfg.experiment = "hermite-check";
  cfg.seed = seed;
  cfg.params = {{"kmax", 8}, {"tol", 1e-9}};
  detail::absorb(c, run_hermite_check(cfg));
  c.wall_ms = sw.ms();
  return c;
}

// 2. Adjoint duality over twelve (G, F) pairs at 1e5 replicas each.
inline CriterionResult criterion_adjoint(std::uint64_t seed, int workers) {
  CriterionResult c{2, "Skorokhod adjoint identity battery"};
  detail::Stopwatch sw;
  ExperimentConfig cfg;
  cfg.experiment = "adjoint-check";
  cfg.seed = derive_seed(seed, 2);
  cfg.reps = 100000;
  cfg.workers = workers;
  detail::absorb(c, run_adjoint_check(cfg));
  c.wall_ms = sw.ms();
  return c;
}

// 3. Mean-one residuals for the planar and 1+1 bridge shifts at 1e5 x 1e2.
inline CriterionResult criterion_mean_one(std::uint64_t seed, int workers) {
  CriterionResult c{3, "Randomized-shift partition mean"};
  detail::Stopwatch sw;
  ExperimentConfig cfg;
  cfg.experiment = "zn";
  cfg.seed = derive_seed(seed, 3);
  cfg.reps = 100000;
  cfg.workers = workers;
  cfg.params = {{"q_reps", 100}};
  detail::absorb(c, run_zn(cfg));
  c.wall_ms = sw.ms();
  return c;
}

// 4. Nested and paired second-moment estimators agree for the 1+1 bridge.
inline CriterionResult criterion_second_moment(std::uint64_t seed, int workers) {
  CriterionResult c{4, "Second-moment estimator duality"};
  detail::Stopwatch sw;
  for (std::size_t n : {std::size_t{64}, std::size_t{256}}) {
    PathOccupationShift shift(bridge_1p1_law(1.0, 0), bridge_strip_basis(1.0), n);
    auto [nested, paired] = second_moment(shift, n, 2000, derive_seed(seed, 40 + n), 48,
                                          workers, 30000);
    c.rows.push_back(row_from_estimate("acceptance", nested));
    c.rows.push_back(row_from_estimate("acceptance", paired));
    double gap = std::abs(nested.mean - paired.mean);
    double sigma = std::sqrt(nested.std_err * nested.std_err + paired.std_err * paired.std_err);
    detail::require(c, gap <= 4.0 * sigma,
                    "n=" + std::to_string(n) + ": nested " + detail::fmt(nested.mean) +
                        " vs paired " + detail::fmt(paired.mean) + ", gap " + detail::fmt(gap) +
                        " <= 4 x " + detail::fmt(sigma));
  }
  c.wall_ms = sw.ms();
  return c;
}

// 5. First and second moments of the 1+1 bridge intersection at an effective
// truncation of 256 coordinates, against sqrt(pi)/2 and 1. The coordinates
// are an orthonormal 256-family adapted to the occupation law: top
// eigenvectors of the empirical coordinate covariance over a wide raw strip
// family. The training draws are disjoint from the evaluation draws.
inline CriterionResult criterion_bridge_moments(std::uint64_t seed, int workers) {
  CriterionResult c{5, "1+1 intersection moments at n=256"};
  detail::Stopwatch sw;
  const PathShiftConfig law = bridge_1p1_law(1.0, 4096, GridKind::graded);
  const BasisSpec raw = bridge_strip_basis(1.0, 0.5, 2.5e-4, 8.0);
  AdaptedProjection proj = train_adapted_projection(law, raw, 1200, 256, 25000,
                                                    derive_seed(seed, 501), workers);
  auto moments = alpha_projected_moments(law, proj, 2, 100000, derive_seed(seed, 502), workers);
  const double oracles[2] = {detail::kSqrtPiHalf, 1.0};
  for (int k = 1; k <= 2; ++k) {
    const MCEstimate& est = moments[static_cast<std::size_t>(k - 1)];
    c.rows.push_back(row_from_estimate("acceptance", est, oracles[k - 1]));
    double rel = std::abs(est.mean - oracles[k - 1]) / oracles[k - 1];
    detail::require(c, rel <= 0.03,
                    "E[alpha^" + std::to_string(k) + "] = " + detail::fmt(est.mean) + " +- " +
                        detail::fmt(est.std_err) + " vs " + detail::fmt(oracles[k - 1]) +
                        " (off by " + detail::fmt(100 * rel) + "%, tol 3%)");
  }
  c.wall_ms = sw.ms();
  return c;
}

// 6. GMC on the circle: closed form pinned by quadrature, gamma=0 exact, and
// the paired second-moment estimator within 5% at gamma=0.5, 1e6 pairs.
inline CriterionResult criterion_gmc_circle(std::uint64_t seed, int workers) {
  CriterionResult c{6, "Circle chaos second moment"};
  detail::Stopwatch sw;
  const double closed = circle_intersection_exponential(0.5);
  const double quad = circle_intersection_quadrature(0.5);
  detail::require(c, std::abs(closed - quad) <= 1e-8,
                  "closed form " + detail::fmt(closed) + " vs quadrature " + detail::fmt(quad));
  detail::require(c, std::abs(closed - detail::kCircleExpHalf) <= 1e-12,
                  "closed form matches the frozen constant");
  const std::size_t n = 2048;
  {
    CircleGmcShift flat(0.0, n);
    auto flat_est = second_moment(flat, n, 16, derive_seed(seed, 60), 8, workers, 64);
    detail::require(c, flat_est.second.mean == 1.0 && flat_est.second.std_err == 0.0,
                    "gamma=0 gives exactly 1");
  }
  CircleGmcShift shift(0.5, n);
  auto [nested, paired] =
      second_moment(shift, n, 400, derive_seed(seed, 61), 16, workers, 1000000);
  c.rows.push_back(row_from_estimate("acceptance", paired, closed));
  c.rows.push_back(row_from_estimate("acceptance", nested, closed));
  double rel = std::abs(paired.mean - closed) / closed;
  detail::require(c, rel <= 0.05, "paired estimator " + detail::fmt(paired.mean) + " +- " +
                                      detail::fmt(paired.std_err) + " off by " +
                                      detail::fmt(100 * rel) + "% (tol 5%)");
  c.wall_ms = sw.ms();
  return c;
}

// 7. Lattice polymer: exact normalization and exact two-route shift identity.
inline CriterionResult criterion_lattice(std::uint64_t seed, int) {
  CriterionResult c{7, "Lattice polymer exactness"};
  detail::Stopwatch sw;
  ExperimentConfig cfg;
  cfg.experiment = "lattice";
  cfg.seed = seed;
  detail::absorb(c, run_lattice(cfg));
  c.wall_ms = sw.ms();
  return c;
}

// 8. Finite-state chain solution rows against e^{tK} at t=1.
inline CriterionResult criterion_chain(std::uint64_t seed, int workers) {
  CriterionResult c{8, "Markov chain polymer vs matrix exponential"};
  detail::Stopwatch sw;
  ExperimentConfig cfg;
  cfg.experiment = "chain";
  cfg.seed = derive_seed(seed, 8);
  cfg.reps = 200000;
  cfg.workers = workers;
  detail::absorb(c, run_chain(cfg));
  const double cross = chain_transition_exact(symmetric_two_state(1.0))[0][1];
  detail::require(c, std::abs(cross - detail::kTwoStateCross) <= 1e-12,
                  "two-state off-diagonal equals (1 - e^{-2})/2");
  c.wall_ms = sw.ms();
  return c;
}

// 9. Cross intersection of independent motion pieces at (s,t) = (1,2).
inline CriterionResult criterion_cross_alpha(std::uint64_t seed, int workers) {
  CriterionResult c{9, "Cross intersection mean at (1,2)"};
  detail::Stopwatch sw;
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  PathShiftConfig law = planar_motion_law(1.0, 2048);
  auto moments =
      alpha_pair_moments(law, law, plane, 512, 1, 100000, derive_seed(seed, 9), workers);
  const double oracle = expected_cross_alpha(1.0, 2.0);
  detail::require(c, std::abs(oracle - detail::kLog2OverPi) <= 1e-12,
                  "closed form matches the frozen log(2)/pi");
  MCEstimate est = moments[0];
  est.label = "cross_alpha_s1_t2";
  c.rows.push_back(row_from_estimate("acceptance", est, oracle));
  double rel = std::abs(est.mean - oracle) / oracle;
  detail::require(c, rel <= 0.03, "E[alpha] = " + detail::fmt(est.mean) + " +- " +
                                      detail::fmt(est.std_err) + " vs " + detail::fmt(oracle) +
                                      " (off by " + detail::fmt(100 * rel) + "%, tol 3%)");
  c.wall_ms = sw.ms();
  return c;
}

// 10. The norm identity behind the moment bound, then motion moments k <= 3
// below the bound at r = k.
inline CriterionResult criterion_moment_bounds(std::uint64_t seed, int workers) {
  CriterionResult c{10, "Planar moment bounds"};
  detail::Stopwatch sw;
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    double v = phi_norm_sq(0.0, r);
    detail::require(c, std::abs(v - r / kTwoPi) <= 1e-8,
                    "phi_norm_sq(0, " + detail::fmt(r) + ") = " + detail::fmt(v) +
                        " vs r/(2pi) = " + detail::fmt(r / kTwoPi));
  }
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  PathShiftConfig law = planar_motion_law(1.0, 2048);
  auto moments =
      alpha_pair_moments(law, law, plane, 512, 3, 40000, derive_seed(seed, 10), workers);
  for (int k = 1; k <= 3; ++k) {
    const double r = static_cast<double>(k);
    const double bound = levy_moment_bound(k, r, r / kTwoPi);
    const MCEstimate& est = moments[static_cast<std::size_t>(k - 1)];
    c.rows.push_back(row_from_estimate("acceptance", est, bound));
    detail::require(c, est.mean <= bound + 4.0 * est.std_err,
                    "E[alpha^" + std::to_string(k) + "] = " + detail::fmt(est.mean) + " +- " +
                        detail::fmt(est.std_err) + " <= bound " + detail::fmt(bound));
  }
  c.wall_ms = sw.ms();
  return c;
}

// 11. Squeezed-bridge intersection variance against the limit 1. The y-pair
// agreement is asserted at nu <= 0.1, where the genuine finite-nu y-effect
// (a factor 1 + y^2 nu^2 on the second moment) sits inside the MC band at
// the pinned replica count; at nu = 0.2 that effect is a real 16% and the
// cells are reported without a cross-y assertion.
inline CriterionResult criterion_alpha_variance(std::uint64_t seed, int workers) {
  CriterionResult c{11, "Squeezed-bridge variance convergence"};
  detail::Stopwatch sw;
  const std::vector<double> nus{0.2, 0.1, 0.05};
  const std::size_t n = 256;
  const std::size_t reps = 50000;
  std::map<std::pair<double, double>, MCEstimate> cells;
  for (double y : {0.0, 2.0}) {
    auto rows = alpha_variance_convergence(nus, y, n, reps,
                                           derive_seed(seed, 110 + static_cast<std::uint64_t>(y)),
                                           workers, 4096);
    for (AlphaVarianceRow& r : rows) {
      MCEstimate est = r.alpha_sq;
      est.label = "alpha_variance_nu" + detail::fmt(r.nu) + "_y" + detail::fmt(y);
      c.rows.push_back(row_from_estimate("acceptance", est, 1.0));
      cells[{r.nu, y}] = est;
      if (r.nu == 0.05) {
        double rel = std::abs(est.mean - 1.0);
        detail::require(c, rel <= 0.10,
                        "nu=0.05 y=" + detail::fmt(y) + ": E[alpha^2] = " + detail::fmt(est.mean) +
                            " +- " + detail::fmt(est.std_err) + " (off by " +
                            detail::fmt(100 * rel) + "%, tol 10%)");
      } else {
        detail::note(c, "     nu=" + detail::fmt(r.nu) + " y=" + detail::fmt(y) +
                            ": E[alpha^2] = " + detail::fmt(est.mean) + " +- " +
                            detail::fmt(est.std_err));
      }
    }
  }
  for (double nu : {0.1, 0.05}) {
    const MCEstimate& a = cells.at({nu, 0.0});
    const MCEstimate& b = cells.at({nu, 2.0});
    double gap = std::abs(a.mean - b.mean);
    double sigma = std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
    detail::require(c, gap <= 4.0 * sigma,
                    "nu=" + detail::fmt(nu) + " y-pair gap " + detail::fmt(gap) + " <= 4 x " +
                        detail::fmt(sigma));
  }
  c.wall_ms = sw.ms();
  return c;
}

// 12. Coupled-coordinate gap halves from N=4 to N=64.
inline CriterionResult criterion_kpz_coupling(std::uint64_t seed, int workers) {
  CriterionResult c{12, "Coupling gap decay"};
  detail::Stopwatch sw;
  const std::vector<double> Ns{4.0, 16.0, 64.0};
  auto rows = kpz_coupling_experiment(Ns, 16, 10000, derive_seed(seed, 12), 0.0, 1.0, workers);
  double d4 = 0.0, d64 = 0.0;
  for (const KpzCouplingRow& r : rows) {
    ResultRow row;
    row.experiment = "acceptance";
    row.label = "kpz_dN_N" + detail::fmt(r.N);
    row.n = 16;
    row.reps = 10000;
    row.mean = r.d_N;
    row.seed = seed;
    c.rows.push_back(std::move(row));
    c.rows.push_back(row_from_estimate("acceptance", r.z));
    detail::note(c, "     N=" + detail::fmt(r.N) + ": d(N) = " + detail::fmt(r.d_N) +
                        ", log scale " + detail::fmt(r.log_scale));
    if (r.N == 4.0) d4 = r.d_N;
    if (r.N == 64.0) d64 = r.d_N;
  }
  detail::require(c, d64 <= 0.5 * d4, "d(64) = " + detail::fmt(d64) + " <= d(4)/2 = " +
                                          detail::fmt(0.5 * d4));
  c.wall_ms = sw.ms();
  return c;
}

// 13. Determinism: byte-identical CSV across reruns with one seed (wall time
// excluded), and identical numbers at worker counts 1, 4, 16. The probe
// experiments cover every reduction pattern: nested replica loops, paired
// draws, the blocked covariance trainer, and the shared-draw coupling run.
namespace detail {

inline std::string csv_without_walltime(const std::vector<ResultRow>& rows) {
  std::vector<ResultRow> scrubbed = rows;
  for (ResultRow& r : scrubbed) r.wall_time_ms = 0.0;
  return csv_table(scrubbed);
}

inline std::vector<ResultRow> determinism_probe(std::uint64_t seed, int workers) {
  std::vector<ResultRow> rows;
  ExperimentConfig zn;
  zn.experiment = "zn";
  zn.seed = seed;
  zn.workers = workers;
  zn.reps = 300;
  zn.params = {{"q_reps", 16}};
  for (ResultRow& r : run_zn(zn).rows) rows.push_back(std::move(r));

  ExperimentConfig gmc;
  gmc.experiment = "gmc-circle";
  gmc.seed = seed;
  gmc.workers = workers;
  gmc.reps = 4000;
  gmc.params = {{"n", 256}, {"nested_reps", 32}, {"gammas", {0.5}}};
  for (ResultRow& r : run_gmc_circle(gmc).rows) rows.push_back(std::move(r));

  const PathShiftConfig law = bridge_1p1_law(1.0, 256, GridKind::graded);
  AdaptedProjection proj = train_adapted_projection(law, bridge_strip_basis(1.0), 64, 16, 400,
                                                    derive_seed(seed, 131), workers);
  auto moments = alpha_projected_moments(law, proj, 2, 400, derive_seed(seed, 132), workers);
  for (const MCEstimate& est : moments)
    rows.push_back(row_from_estimate("determinism", est));

  const std::vector<double> Ns{4.0, 8.0};
  auto kpz = kpz_coupling_experiment(Ns, 8, 200, derive_seed(seed, 133), 0.0, 1.0, workers);
  for (const KpzCouplingRow& r : kpz) {
    rows.push_back(row_from_estimate("determinism", r.z));
    ResultRow d;
    d.experiment = "determinism";
    d.label = "kpz_dN_N" + detail::fmt(r.N);
    d.mean = r.d_N;
    d.seed = seed;
    rows.push_back(std::move(d));
  }
  return rows;
}

}  // namespace detail

inline CriterionResult criterion_determinism(std::uint64_t seed, int) {
  CriterionResult c{13, "Seed and worker-count determinism"};
  detail::Stopwatch sw;
  const std::string first = detail::csv_without_walltime(detail::determinism_probe(seed, 1));
  const std::string rerun = detail::csv_without_walltime(detail::determinism_probe(seed, 1));
  detail::require(c, first == rerun, "rerun with the same seed is byte-identical");
  for (int w : {4, 16}) {
    const std::string other = detail::csv_without_walltime(detail::determinism_probe(seed, w));
    detail::require(c, first == other,
                    "workers=" + std::to_string(w) + " matches workers=1 bit for bit");
  }
  c.wall_ms = sw.ms();
  return c;
}

inline std::vector<CriterionResult> run_acceptance(
    std::uint64_t seed, int workers,
    const std::function<void(const CriterionResult&)>& on_done = {}) {
  using Fn = CriterionResult (*)(std::uint64_t, int);
  static const Fn criteria[] = {
      criterion_hermite,      criterion_adjoint,       criterion_mean_one,
      criterion_second_moment, criterion_bridge_moments, criterion_gmc_circle,
      criterion_lattice,      criterion_chain,         criterion_cross_alpha,
      criterion_moment_bounds, criterion_alpha_variance, criterion_kpz_coupling,
      criterion_determinism,
  };
  std::vector<CriterionResult> out;
  out.reserve(std::size(criteria));
  for (Fn f : criteria) {
    out.push_back(f(seed, workers));
    if (on_done) on_done(out.back());
  }
  return out;
}

inline std::string format_criterion_line(const CriterionResult& c) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "C%02d %-45s %s (%.1f s)", c.index, c.title.c_str(),
                c.passed ? "PASS" : "FAIL", c.wall_ms / 1000.0);
  return buf;
}

}  // namespace wickflow
