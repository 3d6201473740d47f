#pragma once

// Mutual and self intersection local times through basis truncation:
// alpha_n(X, Y') = sum_{j<=n} m_j w_j' for the occupation coordinates of two
// independent paths, plus the closed-form moment oracles the truncated values
// are tested against. The oracles are evaluated in the log domain; the
// chi-norm double integral is genuine nested quadrature, not a collapsed
// closed form, so it exercises the same route used at N > 0.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "wickflow/mc.hpp"
#include "wickflow/parallel.hpp"
#include "wickflow/paths.hpp"
#include "wickflow/rng.hpp"
#include "wickflow/shifts.hpp"

namespace wickflow {

struct MiltSample {
  double alpha = 0.0;
  std::size_t n = 0;
  PathMeta meta_a, meta_b;
};

inline double alpha_n(std::span<const double> ma, std::span<const double> mb, std::size_t n) {
  if (ma.size() < n || mb.size() < n)
    throw std::invalid_argument("alpha_n: coordinate vectors shorter than n");
  CompensatedSum s;
  for (std::size_t j = 0; j < n; ++j) s.add(ma[j] * mb[j]);
  return s.value();
}

inline double alpha_n(const OccupationCoordinates& a, const OccupationCoordinates& b,
                      std::size_t n) {
  if (!(a.basis == b.basis) || a.spacetime != b.spacetime)
    throw std::invalid_argument("alpha_n: basis mismatch");
  return alpha_n(std::span<const double>(a.m), std::span<const double>(b.m), n);
}

// k-th moment of the spacetime intersection local time of two independent
// 1+1-dimensional bridges pinned over [0, t]:
//   sqrt(pi) t^{k/2} k! / (2^k Gamma((k+1)/2)).
// k = 0 gives 1, k = 2 at t = 1 gives exactly 1.
inline double bridge_1p1_moment_exact(int k, double t) {
  if (k < 0) throw std::invalid_argument("bridge_1p1_moment_exact: k >= 0");
  if (!(t > 0.0)) throw std::invalid_argument("bridge_1p1_moment_exact: t > 0");
  double log_val = 0.5 * std::log(kPi) + 0.5 * k * std::log(t) + std::lgamma(k + 1.0) -
                   k * std::log(2.0) - std::lgamma(0.5 * (k + 1.0));
  return std::exp(log_val);
}

// || phi_r ||^2 as the double integral
//   I(N, r) = int int  r^2 e^{-r(t+t')} / (2 pi (t+t'))
//                      * exp(-(t-t')^2 N^2 / (2(t+t')))  dt dt'
// over t, t' > 0. The substitution (u, v) = (t+t', t-t') isolates the 1/u
// factor: I = int_0^inf du r^2 e^{-ru} / (2 pi u) int_0^u e^{-v^2 N^2/(2u)} dv
// (the v-range doubling cancels the Jacobian 1/2). The outer integral runs on
// exp-sinh nodes, geometric near u = 0; the inner one stays numeric so N = 0
// exercises the same code path and must come out at r / (2 pi) by itself.
inline double phi_norm_sq(double N, double r, double tolerance = 1e-10) {
  if (!(r > 0.0)) throw std::invalid_argument("phi_norm_sq: r > 0 required");
  if (N < 0.0) throw std::invalid_argument("phi_norm_sq: N >= 0 required");
  boost::math::quadrature::tanh_sinh<double> inner;
  boost::math::quadrature::exp_sinh<double> outer;
  auto g = [&](double u) {
    double inner_val = inner.integrate(
        [N, u](double v) { return std::exp(-v * v * N * N / (2.0 * u)); }, 0.0, u, tolerance);
    return r * r * std::exp(-r * u) / (kTwoPi * u) * inner_val;
  };
  double err = 0.0, l1 = 0.0;
  double val = outer.integrate(g, tolerance, &err, &l1);
  if (!(std::isfinite(val)) || err > 100.0 * tolerance * std::max(1.0, l1))
    throw std::runtime_error("phi_norm_sq: quadrature did not converge");
  return val;
}

// log of k!^2 e^{2r} (phi_sq / r^2)^k; the k-th moment of the planar
// intersection local time never exceeds exp of this.
inline double levy_moment_bound_log(int k, double r, double phi_sq) {
  if (k < 0) throw std::invalid_argument("levy_moment_bound: k >= 0");
  if (!(r > 0.0) || !(phi_sq > 0.0))
    throw std::invalid_argument("levy_moment_bound: r, phi_sq > 0 required");
  return 2.0 * std::lgamma(k + 1.0) + 2.0 * r + k * (std::log(phi_sq) - 2.0 * std::log(r));
}

inline double levy_moment_bound(int k, double r, double phi_sq) {
  return std::exp(levy_moment_bound_log(k, r, phi_sq));
}

// E alpha for independent planar motion pieces of lengths s and t-s started
// at a common point: (t log t - s log s - (t-s) log(t-s)) / (2 pi).
inline double expected_cross_alpha(double s, double t) {
  if (!(s > 0.0) || !(s < t)) throw std::invalid_argument("expected_cross_alpha: need 0 < s < t");
  auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  return (xlogx(t) - xlogx(s) - xlogx(t - s)) / kTwoPi;
}

// Centered dyadic self-intersection sum
//   gamma(B) = sum_{n<=D} sum_{k<=2^{n-1}} A_{n,k} - E[A_{n,k}],
// A_{n,k} = alpha of the two adjacent dyadic sub-segments
// [(2k-2) t/2^n, (2k-1) t/2^n] and [(2k-1) t/2^n, 2k t/2^n] of one path. The
// centering means come from an independent replica pool, so each main-pool
// term is centered by construction and E[gamma] = 0 up to pool noise.
struct DyadicGamma {
  MCEstimate estimate;
  std::vector<double> gammas;  // per-replica values, for tail diagnostics
};

inline DyadicGamma self_intersection_gamma(const PathShiftConfig& law, const BasisSpec& basis,
                                           std::size_t n, int depth, std::size_t reps,
                                           std::size_t pool_reps, std::uint64_t seed,
                                           int workers = 1) {
  if (depth < 1) throw std::invalid_argument("self_intersection_gamma: depth >= 1");
  if (depth > 20) throw std::invalid_argument("self_intersection_gamma: depth too large");
  if (law.spacetime)
    throw std::invalid_argument("self_intersection_gamma: spatial coordinates only");
  if (reps < 2 || pool_reps < 2)
    throw std::invalid_argument("self_intersection_gamma: need reps, pool_reps >= 2");
  const std::size_t blocks = std::size_t{1} << depth;
  // Segment endpoints must be grid points: round the step count up to a
  // multiple of 2^depth.
  std::size_t steps = law.steps ? law.steps : 16 * std::max<std::size_t>(n, 1);
  steps = ((steps + blocks - 1) / blocks) * blocks;

  OccupationEngine engine(basis, n, false);
  const std::size_t terms = blocks - 1;  // sum over levels of 2^{n-1}

  auto sample_path = [&](PathSample& p, std::uint64_t s) {
    if (law.law == LawKind::bridge)
      sample_bridge_into(p, law.dim, law.start, law.end, law.horizon, law.cov, steps, s);
    else if (law.law == LawKind::motion)
      sample_motion_into(p, law.dim, law.start, law.drift, law.horizon, law.cov, steps, s);
    else
      throw std::invalid_argument("self_intersection_gamma: law must be bridge or motion");
  };

  // A_{n,k} values for one path, flattened level by level.
  auto terms_of = [&](const PathSample& p, std::vector<double>& out,
                      OccupationEngine::Scratch& ws, std::vector<double>& mbuf) {
    out.resize(terms);
    std::size_t idx = 0;
    for (int lev = 1; lev <= depth; ++lev) {
      const std::size_t seg = steps >> lev;  // grid indices per dyadic sub-segment
      const std::size_t pairs = std::size_t{1} << (lev - 1);
      mbuf.resize(2 * pairs * n);
      for (std::size_t piece = 0; piece < 2 * pairs; ++piece)
        engine.coords_range(p, piece * seg, (piece + 1) * seg,
                            std::span<double>(mbuf.data() + piece * n, n), ws);
      for (std::size_t k = 0; k < pairs; ++k)
        out[idx++] = alpha_n(std::span<const double>(mbuf.data() + 2 * k * n, n),
                             std::span<const double>(mbuf.data() + (2 * k + 1) * n, n), n);
    }
  };

  const std::uint64_t pool_seed = derive_seed(seed, 1);
  const std::uint64_t main_seed = derive_seed(seed, 2);

  std::vector<std::vector<double>> pool_rows =
      replica_map<std::vector<double>>(pool_reps, workers, [&](std::size_t i) {
        thread_local PathSample p;
        thread_local OccupationEngine::Scratch ws;
        thread_local std::vector<double> mbuf;
        std::vector<double> row;
        sample_path(p, derive_seed(pool_seed, i));
        terms_of(p, row, ws, mbuf);
        return row;
      });
  std::vector<double> centers(terms, 0.0);
  for (const std::vector<double>& row : pool_rows) {
    for (std::size_t t = 0; t < terms; ++t) centers[t] += row[t];
  }
  for (double& c : centers) c /= static_cast<double>(pool_reps);

  std::vector<double> gammas = replica_map<double>(reps, workers, [&](std::size_t i) {
    thread_local PathSample p;
    thread_local OccupationEngine::Scratch ws;
    thread_local std::vector<double> mbuf, row;
    sample_path(p, derive_seed(main_seed, i));
    terms_of(p, row, ws, mbuf);
    CompensatedSum s;
    for (std::size_t t = 0; t < terms; ++t) s.add(row[t] - centers[t]);
    return s.value();
  });

  DyadicGamma out;
  out.estimate = estimate_from_samples(gammas, n, seed, "self_intersection_gamma", true);
  out.gammas = std::move(gammas);
  return out;
}

// E[alpha_n^k] for k = 1..kmax over independent pairs, X from law_a and Y
// from law_b, sharing one basis. One replica pool feeds every moment, so the
// estimates are consistent with each other replica by replica.
inline std::vector<MCEstimate> alpha_pair_moments(const PathShiftConfig& law_a,
                                                  const PathShiftConfig& law_b,
                                                  const BasisSpec& basis, std::size_t n, int kmax,
                                                  std::size_t pair_reps, std::uint64_t seed,
                                                  int workers = 1) {
  if (kmax < 1 || kmax > 6) throw std::invalid_argument("alpha_pair_moments: kmax in 1..6");
  if (n < 1 || pair_reps < 2)
    throw std::invalid_argument("alpha_pair_moments: need n >= 1, pair_reps >= 2");
  if (law_a.spacetime != law_b.spacetime)
    throw std::invalid_argument("alpha_pair_moments: spacetime flags differ");
  const PathOccupationShift shift_a(law_a, basis, n);
  const PathOccupationShift shift_b(law_b, basis, n);
  std::vector<double> alphas = replica_map<double>(pair_reps, workers, [&](std::size_t i) {
    thread_local std::vector<double> ma, mb;
    ma.resize(n);
    mb.resize(n);
    shift_a.draw(derive_seed(seed, 2 * i), ma);
    shift_b.draw(derive_seed(seed, 2 * i + 1), mb);
    return alpha_n(ma, mb, n);
  });
  std::vector<MCEstimate> out;
  out.reserve(static_cast<std::size_t>(kmax));
  std::vector<double> powers(alphas);
  for (int k = 1; k <= kmax; ++k) {
    if (k > 1)
      for (std::size_t i = 0; i < powers.size(); ++i) powers[i] *= alphas[i];
    out.push_back(estimate_from_samples(powers, n, seed, "alpha_moment_k" + std::to_string(k),
                                        k > 1));
  }
  return out;
}

// Orthonormal recombination of a raw occupation family: estimate the second
// moment matrix R = E[m m^T] from a training pool, keep its top n_out
// eigenvectors V, and use V^T m as coordinates. The recombined elements
// sum_i V_ij e_i are exactly orthonormal, and the top eigenspace of R is by
// construction where the intersection functionals concentrate, so n_out much
// smaller than n_raw loses almost nothing. Training draws must come from a
// seed stream disjoint from later evaluation seeds.
struct AdaptedProjection {
  BasisSpec raw;
  bool spacetime = true;
  std::size_t n_raw = 0;
  std::size_t n_out = 0;
  std::vector<double> V;  // n_raw x n_out, column major, orthonormal columns
};

inline AdaptedProjection train_adapted_projection(const PathShiftConfig& law,
                                                  const BasisSpec& raw, std::size_t n_raw,
                                                  std::size_t n_out, std::size_t train_reps,
                                                  std::uint64_t seed, int workers = 1) {
  if (n_out < 1 || n_out > n_raw)
    throw std::invalid_argument("train_adapted_projection: need 1 <= n_out <= n_raw");
  if (train_reps < n_out)
    throw std::invalid_argument("train_adapted_projection: need train_reps >= n_out");
  const PathOccupationShift shift(law, raw, n_raw);
  const auto dim = static_cast<Eigen::Index>(n_raw);
  // Fixed block count: per-block Gram accumulators are merged in block order,
  // so the trained matrix is bit-identical for every worker count.
  constexpr std::size_t kBlocks = 16;
  std::vector<Eigen::MatrixXd> parts =
      replica_map<Eigen::MatrixXd>(kBlocks, workers, [&](std::size_t b) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd m(dim);
        const std::size_t chunk = (train_reps + kBlocks - 1) / kBlocks;
        const std::size_t lo = b * chunk;
        const std::size_t hi = std::min(train_reps, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
          shift.draw(derive_seed(seed, i), std::span<double>(m.data(), n_raw));
          acc.selfadjointView<Eigen::Lower>().rankUpdate(m);
        }
        return acc;
      });
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(dim, dim);
  for (const Eigen::MatrixXd& p : parts) R += p;
  R = Eigen::MatrixXd(R.selfadjointView<Eigen::Lower>());
  R /= static_cast<double>(train_reps);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("train_adapted_projection: eigensolver failed");
  AdaptedProjection proj;
  proj.raw = raw;
  proj.spacetime = law.spacetime;
  proj.n_raw = n_raw;
  proj.n_out = n_out;
  proj.V.resize(n_raw * n_out);
  // Eigenvalues come out ascending; store the top n_out columns descending.
  for (std::size_t j = 0; j < n_out; ++j) {
    const auto col = es.eigenvectors().col(dim - 1 - static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < n_raw; ++i) proj.V[j * n_raw + i] = col(static_cast<Eigen::Index>(i));
  }
  return proj;
}

// E[alpha^k] of the projected coordinates over independent same-law pairs.
inline std::vector<MCEstimate> alpha_projected_moments(const PathShiftConfig& law,
                                                       const AdaptedProjection& proj, int kmax,
                                                       std::size_t pair_reps, std::uint64_t seed,
                                                       int workers = 1) {
  if (kmax < 1 || kmax > 6) throw std::invalid_argument("alpha_projected_moments: kmax in 1..6");
  if (pair_reps < 2) throw std::invalid_argument("alpha_projected_moments: pair_reps >= 2");
  if (law.spacetime != proj.spacetime)
    throw std::invalid_argument("alpha_projected_moments: spacetime mismatch");
  const PathOccupationShift shift(law, proj.raw, proj.n_raw);
  const auto rows = static_cast<Eigen::Index>(proj.n_raw);
  const auto cols = static_cast<Eigen::Index>(proj.n_out);
  const Eigen::Map<const Eigen::MatrixXd> V(proj.V.data(), rows, cols);
  std::vector<double> alphas = replica_map<double>(pair_reps, workers, [&](std::size_t i) {
    thread_local Eigen::VectorXd ma, mb, pa, pb;
    ma.resize(rows);
    mb.resize(rows);
    shift.draw(derive_seed(seed, 2 * i), std::span<double>(ma.data(), proj.n_raw));
    shift.draw(derive_seed(seed, 2 * i + 1), std::span<double>(mb.data(), proj.n_raw));
    pa.noalias() = V.transpose() * ma;
    pb.noalias() = V.transpose() * mb;
    return pa.dot(pb);
  });
  std::vector<MCEstimate> out;
  out.reserve(static_cast<std::size_t>(kmax));
  std::vector<double> powers(alphas);
  for (int k = 1; k <= kmax; ++k) {
    if (k > 1)
      for (std::size_t i = 0; i < powers.size(); ++i) powers[i] *= alphas[i];
    out.push_back(estimate_from_samples(powers, proj.n_out, seed,
                                        "alpha_projected_k" + std::to_string(k), k > 1));
  }
  return out;
}

}  // namespace wickflow
