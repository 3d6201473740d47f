#pragma once

// Heat-equation solvers assembled from the randomized-shift partition
// function: u = p * Z_n on the plane (spatial white noise, no time axis in
// the elements) and z = q * Z_n in 1+1 dimensions (spacetime white noise),
// plus the first-chaos-coefficient cross-check and the two convergence
// experiments behind the coupling picture: the coupled-coordinate gap d(N)
// and the variance of the planar intersection functional as its time-like
// fluctuation is switched off.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wickflow/basis.hpp"
#include "wickflow/mathutil.hpp"
#include "wickflow/mc.hpp"
#include "wickflow/parallel.hpp"
#include "wickflow/paths.hpp"
#include "wickflow/rng.hpp"
#include "wickflow/shifts.hpp"

namespace wickflow {

enum class SheDim { one_plus_one, planar };

inline int she_spatial_dim(SheDim d) { return d == SheDim::planar ? 2 : 1; }

struct SheQuery {
  SheDim dimension = SheDim::planar;
  std::vector<double> start_point{0.0, 0.0};
  double start_time = 0.0;
  std::vector<double> end_point{0.0, 0.0};
  double end_time = 1.0;
  std::size_t n = 0;
  double nu = 1.0;    // variance rate of the polymer path per spatial coordinate
  double beta = 1.0;  // noise coupling; scales every shift coordinate
  double rho = 1.0;   // time-like variance rate (enters the coupling bookkeeping)
  std::size_t q_reps = 1024;
  std::uint64_t seed = 1;
  std::size_t steps = 0;  // 0 -> occupation default 16*n
  GridKind grid = GridKind::uniform;
};

inline void validate_she_query(const SheQuery& q) {
  const auto d = static_cast<std::size_t>(she_spatial_dim(q.dimension));
  if (q.start_point.size() != d || q.end_point.size() != d)
    throw std::invalid_argument("she query: point dimension mismatch");
  if (!(q.end_time > q.start_time))
    throw std::invalid_argument("she query: end time must exceed start time");
  if (!(q.nu > 0.0) || !(q.beta > 0.0) || !(q.rho > 0.0))
    throw std::invalid_argument("she query: parameters must be positive");
  if (q.q_reps < 2) throw std::invalid_argument("she query: need q_reps >= 2");
}

// p(x,t) = exp(-|x|^2/2t) / (2 pi t) on the plane;
// q(x,t) = exp(-x^2/2t) / sqrt(2 pi t) on the line.
inline double heat_kernel(SheDim dim, std::span<const double> x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be positive");
  if (x.size() != static_cast<std::size_t>(she_spatial_dim(dim)))
    throw std::invalid_argument("heat_kernel: point dimension mismatch");
  double r2 = 0.0;
  for (double c : x) r2 += c * c;
  const double norm =
      dim == SheDim::planar ? 1.0 / (kTwoPi * t) : 1.0 / std::sqrt(kTwoPi * t);
  return norm * std::exp(-0.5 * r2 / t);
}

namespace detail {

// Multiplies every drawn coordinate by a fixed factor (the noise coupling).
class ScaledShift final : public ShiftSampler {
 public:
  ScaledShift(const ShiftSampler& base, double factor) : base_(&base), factor_(factor) {}
  std::size_t dim() const override { return base_->dim(); }
  std::string kind() const override { return base_->kind() + "-scaled"; }
  void draw(std::uint64_t seed, std::span<double> m) const override {
    base_->draw(seed, m);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] *= factor_;
  }

 private:
  const ShiftSampler* base_;
  double factor_;
};

}  // namespace detail

// The polymer path behind the solution: a bridge from the query's start to
// its end over the elapsed time, variance rate nu per coordinate. The 1+1
// solution pairs the 1-d bridge with spacetime elements; the planar one pairs
// the 2-d bridge with purely spatial plane elements, because its driving
// noise has no time axis.
inline PathShiftConfig she_shift_config(const SheQuery& q) {
  validate_she_query(q);
  PathShiftConfig cfg;
  cfg.law = LawKind::bridge;
  cfg.dim = she_spatial_dim(q.dimension);
  cfg.start = q.start_point;
  cfg.end = q.end_point;
  cfg.cov.assign(static_cast<std::size_t>(cfg.dim), q.nu);
  cfg.horizon = q.end_time - q.start_time;
  cfg.spacetime = q.dimension == SheDim::one_plus_one;
  cfg.steps = q.steps;
  cfg.grid = q.grid;
  return cfg;
}

inline BasisSpec default_she_basis(const SheQuery& q) {
  if (q.dimension == SheDim::one_plus_one)
    return bridge_strip_basis(q.end_time - q.start_time);
  BasisSpec spec;
  spec.kind = BasisKind::hermite_plane_tensor;
  return spec;
}

// Kernel times the partition estimate of the query's occupation shift. With
// n = 0 every Q-weight is identically 1 and the result is the kernel exactly;
// for any n the P-mean of the estimate is the kernel.
inline MCEstimate solve_wick(const SheQuery& q, std::span<const double> xi, int workers = 1) {
  validate_she_query(q);
  if (xi.size() != q.n) throw std::invalid_argument("solve_wick: |xi| != n");
  std::vector<double> rel(q.end_point);
  for (std::size_t c = 0; c < rel.size(); ++c) rel[c] -= q.start_point[c];
  const double kernel = heat_kernel(q.dimension, rel, q.nu * (q.end_time - q.start_time));
  PathOccupationShift shift(she_shift_config(q), default_she_basis(q), q.n);
  detail::ScaledShift scaled(shift, q.beta);
  MCEstimate e = partition_Zn(scaled, xi, q.q_reps, q.seed, workers);
  e.mean *= kernel;
  e.std_err *= kernel;
  e.label = q.dimension == SheDim::planar ? "solve_wick_planar" : "solve_wick_1p1";
  return e;
}

struct ChaosCoefficient {
  MCEstimate marginal;          // smoothed occupation density at (y,s), times q(x,t)
  double kernel_product = 0.0;  // q(y,s) * q(x-y, t-s)
};

// First chaos coefficient of the 1+1 solution at (x,t), evaluated at (y,s) by
// two routes: a Gaussian-kernel density estimate of the bridge marginal at
// time s (scaled by q(x,t)) against the exact product of heat kernels. s is
// snapped to the nearest grid time; bandwidth 0 picks the Silverman rule from
// the exact bridge standard deviation. Only k = 1 has the product form.
inline ChaosCoefficient chaos_coefficient_1p1(int k, double y, double s, double x, double t,
                                              std::size_t reps = 20000, std::uint64_t seed = 1,
                                              double bandwidth = 0.0, std::size_t steps = 1024,
                                              int workers = 1) {
  if (k != 1) throw std::invalid_argument("chaos_coefficient_1p1: only k = 1 is implemented");
  if (!(t > 0.0) || !(s > 0.0) || !(s < t))
    throw std::invalid_argument("chaos_coefficient_1p1: need 0 < s < t");
  if (reps < 2) throw std::invalid_argument("chaos_coefficient_1p1: need reps >= 2");
  if (steps < 4) throw std::invalid_argument("chaos_coefficient_1p1: need steps >= 4");

  const auto idx = static_cast<std::size_t>(
      std::llround(s / t * static_cast<double>(steps)));
  if (idx < 1 || idx >= steps)
    throw std::invalid_argument("chaos_coefficient_1p1: s too close to 0 or t for the grid");
  const double s_snap = t * static_cast<double>(idx) / static_cast<double>(steps);

  const double q_xt = heat_kernel(SheDim::one_plus_one, std::span<const double>(&x, 1), t);
  const double sigma = std::sqrt(s_snap * (t - s_snap) / t);
  const double h =
      bandwidth > 0.0 ? bandwidth : 1.06 * sigma * std::pow(static_cast<double>(reps), -0.2);

  const std::vector<double> p0{0.0}, px{x}, c1{1.0};
  std::vector<double> vals = replica_map<double>(reps, workers, [&](std::size_t i) {
    thread_local PathSample path;
    sample_bridge_into(path, 1, p0, px, t, c1, steps, derive_seed(seed, i));
    const double u = (path.points[idx] - y) / h;
    return std::exp(-0.5 * u * u) / (h * std::sqrt(kTwoPi));
  });
  ChaosCoefficient out;
  out.marginal = estimate_from_samples(vals, 1, seed, "chaos_coefficient_1p1");
  out.marginal.mean *= q_xt;
  out.marginal.std_err *= q_xt;

  double yrel = y, xrest = x - y;
  out.kernel_product = heat_kernel(SheDim::one_plus_one, std::span<const double>(&yrel, 1), s) *
                       heat_kernel(SheDim::one_plus_one, std::span<const double>(&xrest, 1), t - s);
  return out;
}

// log of sqrt(2 pi rho s) * N * exp(N^2 s / (2 rho)). The factor itself
// overflows double for N around 38, so it is only ever reported in log scale
// and never multiplied into estimates.
inline double kpz_log_scale_factor(double N, double rho = 1.0, double s = 1.0) {
  if (!(N > 0.0) || !(rho > 0.0) || !(s > 0.0))
    throw std::invalid_argument("kpz_log_scale_factor: N, rho, s must be positive");
  return 0.5 * std::log(kTwoPi * rho * s) + std::log(N) + N * N * s / (2.0 * rho);
}

struct KpzCouplingRow {
  double N = 0.0;
  double d_N = 0.0;        // max_j mean |m_{N,j} - m_j|
  MCEstimate z;            // partition estimate from the coupled coordinates
  double log_scale = 0.0;  // log of the divergent prefactor, bookkeeping only
};

// Coupled-coordinate experiment over a shared pair of 1-d bridges per
// replica: b_sp from 0 to y and b_ti from 0 to 0, both on [0,1] (variance
// rates 1 and rho). For finite N the plane elements are integrated along
// (b_sp(r), b_ti(r)/N + r); the limiting coordinates replace the second
// argument by r. d(N) uses identical draws for both, so it isolates the
// coupling gap. One xi draw, shared across all N, feeds the per-N partition
// column.
inline std::vector<KpzCouplingRow> kpz_coupling_experiment(
    std::span<const double> N_list, std::size_t n, std::size_t reps, std::uint64_t seed,
    double y = 0.0, double rho = 1.0, int workers = 1, std::size_t steps = 0) {
  if (N_list.empty()) throw std::invalid_argument("kpz_coupling_experiment: empty N list");
  for (double N : N_list)
    if (!(N >= 1.0)) throw std::invalid_argument("kpz_coupling_experiment: N values must be >= 1");
  if (n < 1 || reps < 2)
    throw std::invalid_argument("kpz_coupling_experiment: need n >= 1, reps >= 2");
  if (!(rho > 0.0)) throw std::invalid_argument("kpz_coupling_experiment: rho must be positive");
  if (steps == 0) steps = 16 * n;

  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  const OccupationEngine engine(plane, n, false);

  std::vector<double> xi(n);
  {
    RngStream rng(derive_seed(seed, 0));
    for (double& v : xi) v = rng.gaussian();
  }
  const std::uint64_t seed_sp = derive_seed(seed, 1);
  const std::uint64_t seed_ti = derive_seed(seed, 2);
  const std::vector<double> p0{0.0}, py{y}, c1{1.0}, crho{rho};

  struct Rep {
    std::vector<double> gap;
    double logw = 0.0;
  };

  std::vector<KpzCouplingRow> rows;
  rows.reserve(N_list.size());
  for (double N : N_list) {
    std::vector<Rep> per = replica_map<Rep>(reps, workers, [&](std::size_t i) {
      thread_local PathSample sp, ti, flat;
      thread_local OccupationEngine::Scratch ws;
      thread_local std::vector<double> mN, mlim;
      sample_bridge_into(sp, 1, p0, py, 1.0, c1, steps, derive_seed(seed_sp, i));
      sample_bridge_into(ti, 1, p0, p0, 1.0, crho, steps, derive_seed(seed_ti, i));
      const std::size_t pts = sp.size();
      flat.times = sp.times;
      flat.meta.dim = 2;
      flat.points.resize(2 * pts);
      for (std::size_t p = 0; p < pts; ++p) {
        flat.points[2 * p] = sp.points[p];
        flat.points[2 * p + 1] = ti.points[p] / N + sp.times[p];
      }
      mN.resize(n);
      mlim.resize(n);
      engine.coords(flat, mN, ws);
      for (std::size_t p = 0; p < pts; ++p) flat.points[2 * p + 1] = sp.times[p];
      engine.coords(flat, mlim, ws);
      Rep r;
      r.gap.resize(n);
      double lw = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        r.gap[j] = std::abs(mN[j] - mlim[j]);
        lw += mN[j] * xi[j] - 0.5 * mN[j] * mN[j];
      }
      r.logw = lw;
      return r;
    });

    std::vector<CompensatedSum> gap_sum(n);
    double lmax = -std::numeric_limits<double>::infinity();
    for (const Rep& r : per) lmax = std::max(lmax, r.logw);
    std::vector<double> w(per.size());
    for (std::size_t i = 0; i < per.size(); ++i) {
      w[i] = std::exp(per[i].logw - lmax);
      for (std::size_t j = 0; j < n; ++j) gap_sum[j].add(per[i].gap[j]);
    }
    KpzCouplingRow row;
    row.N = N;
    for (std::size_t j = 0; j < n; ++j)
      row.d_N = std::max(row.d_N, gap_sum[j].value() / static_cast<double>(reps));
    row.z = estimate_from_samples(w, n, seed, "kpz_Z_coupled", true);
    const double scale = std::exp(lmax);
    row.z.mean *= scale;
    row.z.std_err *= scale;
    row.log_scale = kpz_log_scale_factor(N, rho, 1.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct AlphaVarianceRow {
  double nu = 0.0;
  MCEstimate alpha_sq;
  double oracle = 1.0;  // exact limit of E[alpha^2] as nu -> 0 at horizon 1
};

// E[alpha_n(B, B')^2] for independent planar bridges pinned (0,0) -> (y,1)
// with covariance diag(1, nu^2), against the nu -> 0 limit 1. Paths are
// translated to run (-y/2, 0) -> (y/2, 1), which leaves the intersection
// functional unchanged, and the coordinates use the strip family sheared to
// the bridge mean line so the truncation quality does not depend on y. The
// graded grid keeps the pin-layer quadrature error out of the estimates.
inline std::vector<AlphaVarianceRow> alpha_variance_convergence(
    std::span<const double> nu_list, double y, std::size_t n, std::size_t reps,
    std::uint64_t seed, int workers = 1, std::size_t steps = 0) {
  if (nu_list.empty()) throw std::invalid_argument("alpha_variance_convergence: empty nu list");
  for (double nu : nu_list)
    if (!(nu > 0.0 && nu <= 1.0))
      throw std::invalid_argument("alpha_variance_convergence: nu values must lie in (0, 1]");
  if (n < 1 || reps < 2)
    throw std::invalid_argument("alpha_variance_convergence: need n >= 1, reps >= 2");
  if (steps == 0) steps = 16 * n;

  BasisSpec strip = bridge_strip_basis(1.0);
  strip.strip_shear = y;
  const OccupationEngine engine(strip, n, false);
  const std::vector<double> grid = graded_grid(1.0, steps);
  const std::vector<double> pa{-0.5 * y, 0.0}, pb{0.5 * y, 1.0};

  std::vector<AlphaVarianceRow> rows;
  rows.reserve(nu_list.size());
  for (std::size_t c = 0; c < nu_list.size(); ++c) {
    const double nu = nu_list[c];
    const std::vector<double> cov{1.0, nu * nu};
    const std::uint64_t seed_c = derive_seed(seed, c);
    std::vector<double> vals = replica_map<double>(reps, workers, [&](std::size_t i) {
      thread_local PathSample bx, by;
      thread_local OccupationEngine::Scratch ws;
      thread_local std::vector<double> mx, my;
      sample_bridge_grid_into(bx, 2, pa, pb, grid, cov, derive_seed(seed_c, 2 * i));
      sample_bridge_grid_into(by, 2, pa, pb, grid, cov, derive_seed(seed_c, 2 * i + 1));
      mx.resize(n);
      my.resize(n);
      engine.coords(bx, mx, ws);
      engine.coords(by, my, ws);
      double alpha = 0.0;
      for (std::size_t j = 0; j < n; ++j) alpha += mx[j] * my[j];
      return alpha * alpha;
    });
    AlphaVarianceRow row;
    row.nu = nu;
    row.alpha_sq = estimate_from_samples(vals, n, seed_c, "alpha_variance", true);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace wickflow
