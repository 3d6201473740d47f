#pragma once

// Path sampling and occupation-measure coordinates.
//
// Bridges and motions are sampled by exact Gaussian conditioning on a uniform
// time grid, so the grid marginals carry the target law exactly and the only
// bias anywhere downstream is the time quadrature of m_j. Occupation
// coordinates are composite-trapezoid integrals of basis elements along the
// path; for tensor bases the accumulation runs over the (a,b) degree triangle
// so each path point costs one exp plus a vectorizable block of fused
// multiply-adds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wickflow/basis.hpp"
#include "wickflow/mathutil.hpp"
#include "wickflow/rng.hpp"

namespace wickflow {

enum class LawKind { motion, bridge, chain };

struct PathMeta {
  LawKind law = LawKind::motion;
  int dim = 1;
  std::vector<double> start;
  std::vector<double> end;    // bridges only
  std::vector<double> drift;  // motions only
  std::vector<double> cov;    // variance rate per coordinate
  double horizon = 1.0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
};

struct PathSample {
  std::vector<double> times;   // size points_count; times[0]=0, back()=horizon
  std::vector<double> points;  // dim-major per time: points[i*dim + c]
  PathMeta meta;

  std::size_t size() const { return times.size(); }
  double coord(std::size_t i, int c) const {
    return points[i * static_cast<std::size_t>(meta.dim) + static_cast<std::size_t>(c)];
  }
};

namespace detail {
inline void check_dim_vec(const std::vector<double>& v, int dim, const char* what) {
  if (v.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument(std::string("path sampler: ") + what + " has wrong dimension");
}

inline void check_grid(const std::vector<double>& times) {
  if (times.size() < 2) throw std::invalid_argument("path sampler: grid needs >= 2 points");
  if (times.front() != 0.0) throw std::invalid_argument("path sampler: grid must start at 0");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i + 1] > times[i]))
      throw std::invalid_argument("path sampler: grid must be strictly increasing");
}
}  // namespace detail

// Time grids over [0, t]. Bridge occupation densities blow up like 1/sqrt(tau)
// at the pins, so the graded grid clusters nodes there (quadratically, via
// sin^2); composite trapezoid on it converges at the smooth-integrand rate
// where the uniform grid is stuck at O(sqrt(dt)).
enum class GridKind { uniform, graded };

inline std::vector<double> uniform_grid(double t, std::size_t steps) {
  if (!(t > 0.0)) throw std::invalid_argument("uniform_grid: horizon must be positive");
  if (steps < 1) throw std::invalid_argument("uniform_grid: need steps >= 1");
  std::vector<double> g(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i)
    g[i] = t * static_cast<double>(i) / static_cast<double>(steps);
  g.back() = t;
  return g;
}

inline std::vector<double> graded_grid(double t, std::size_t steps) {
  if (!(t > 0.0)) throw std::invalid_argument("graded_grid: horizon must be positive");
  if (steps < 2) throw std::invalid_argument("graded_grid: need steps >= 2");
  std::vector<double> g(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    double u = std::sin(0.5 * kPi * static_cast<double>(i) / static_cast<double>(steps));
    g[i] = t * u * u;
  }
  g.front() = 0.0;
  g.back() = t;
  return g;
}

inline std::vector<double> make_grid(GridKind kind, double t, std::size_t steps) {
  return kind == GridKind::graded ? graded_grid(t, steps) : uniform_grid(t, steps);
}

// Exact bridge marginals on an arbitrary grid: conditionally on B(t_i)=a and
// B(T)=end, the next grid value is Gaussian with mean a + (end-a) dt/(T-t_i)
// and variance cov * dt (T-t_{i+1})/(T-t_i). Endpoints are set exactly. The
// _into variants reuse the sample's buffers so hot Monte Carlo loops avoid
// reallocation.
inline void sample_bridge_grid_into(PathSample& s, int dim, const std::vector<double>& start,
                                    const std::vector<double>& end,
                                    const std::vector<double>& times,
                                    const std::vector<double>& cov, std::uint64_t seed) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("sample_bridge: dim must be 1 or 2");
  detail::check_grid(times);
  detail::check_dim_vec(start, dim, "start");
  detail::check_dim_vec(end, dim, "end");
  detail::check_dim_vec(cov, dim, "cov");
  for (double c : cov)
    if (!(c > 0.0)) throw std::invalid_argument("sample_bridge: degenerate covariance");

  const double t = times.back();
  const std::size_t pts = times.size();
  const std::size_t steps = pts - 1;
  s.meta.law = LawKind::bridge;
  s.meta.dim = dim;
  s.meta.start = start;
  s.meta.end = end;
  s.meta.drift.clear();
  s.meta.cov = cov;
  s.meta.horizon = t;
  s.meta.steps = steps;
  s.meta.seed = seed;
  s.times = times;
  s.points.resize(pts * static_cast<std::size_t>(dim));

  RngStream rng(seed);
  for (int c = 0; c < dim; ++c) s.points[static_cast<std::size_t>(c)] = start[static_cast<std::size_t>(c)];
  for (std::size_t i = 0; i + 1 < pts; ++i) {
    const double dt = times[i + 1] - times[i];
    const double remain = t - times[i];
    const double frac = dt / remain;
    const double varfac = dt * std::max(0.0, remain - dt) / remain;
    for (int c = 0; c < dim; ++c) {
      const std::size_t cc = static_cast<std::size_t>(c);
      double a = s.points[i * static_cast<std::size_t>(dim) + cc];
      double mean = a + (end[cc] - a) * frac;
      s.points[(i + 1) * static_cast<std::size_t>(dim) + cc] =
          mean + std::sqrt(cov[cc] * varfac) * rng.gaussian();
    }
  }
  // The final conditional variance is identically 0; snap away float residue.
  for (int c = 0; c < dim; ++c)
    s.points[steps * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
        end[static_cast<std::size_t>(c)];
}

inline void sample_bridge_into(PathSample& s, int dim, const std::vector<double>& start,
                               const std::vector<double>& end, double t,
                               const std::vector<double>& cov, std::size_t steps,
                               std::uint64_t seed) {
  sample_bridge_grid_into(s, dim, start, end, uniform_grid(t, steps), cov, seed);
}

inline PathSample sample_bridge(int dim, const std::vector<double>& start,
                                const std::vector<double>& end, double t,
                                const std::vector<double>& cov, std::size_t steps,
                                std::uint64_t seed) {
  PathSample s;
  sample_bridge_into(s, dim, start, end, t, cov, steps, seed);
  return s;
}

inline void sample_motion_grid_into(PathSample& s, int dim, const std::vector<double>& start,
                                    const std::vector<double>& drift,
                                    const std::vector<double>& times,
                                    const std::vector<double>& cov, std::uint64_t seed) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("sample_motion: dim must be 1 or 2");
  detail::check_grid(times);
  detail::check_dim_vec(start, dim, "start");
  detail::check_dim_vec(drift, dim, "drift");
  detail::check_dim_vec(cov, dim, "cov");
  for (double c : cov)
    if (!(c > 0.0)) throw std::invalid_argument("sample_motion: degenerate covariance");

  const std::size_t pts = times.size();
  s.meta.law = LawKind::motion;
  s.meta.dim = dim;
  s.meta.start = start;
  s.meta.end.clear();
  s.meta.drift = drift;
  s.meta.cov = cov;
  s.meta.horizon = times.back();
  s.meta.steps = pts - 1;
  s.meta.seed = seed;
  s.times = times;
  s.points.resize(pts * static_cast<std::size_t>(dim));

  RngStream rng(seed);
  for (int c = 0; c < dim; ++c) s.points[static_cast<std::size_t>(c)] = start[static_cast<std::size_t>(c)];
  for (std::size_t i = 0; i + 1 < pts; ++i) {
    const double dt = times[i + 1] - times[i];
    for (int c = 0; c < dim; ++c) {
      const std::size_t cc = static_cast<std::size_t>(c);
      double a = s.points[i * static_cast<std::size_t>(dim) + cc];
      s.points[(i + 1) * static_cast<std::size_t>(dim) + cc] =
          a + drift[cc] * dt + std::sqrt(cov[cc] * dt) * rng.gaussian();
    }
  }
}

inline void sample_motion_into(PathSample& s, int dim, const std::vector<double>& start,
                               const std::vector<double>& drift, double t,
                               const std::vector<double>& cov, std::size_t steps,
                               std::uint64_t seed) {
  sample_motion_grid_into(s, dim, start, drift, uniform_grid(t, steps), cov, seed);
}

inline PathSample sample_motion(int dim, const std::vector<double>& start,
                                const std::vector<double>& drift, double t,
                                const std::vector<double>& cov, std::size_t steps,
                                std::uint64_t seed) {
  PathSample s;
  sample_motion_into(s, dim, start, drift, t, cov, steps, seed);
  return s;
}

struct OccupationCoordinates {
  std::vector<double> m;
  BasisSpec basis;
  bool spacetime = false;
  PathMeta path_meta;
  std::string quadrature = "trapezoid";
};

namespace detail {

inline void trapezoid_weights(const std::vector<double>& times, std::vector<double>& w) {
  const std::size_t p = times.size();
  w.resize(p);
  if (p == 1) {
    w[0] = 0.0;
    return;
  }
  w[0] = 0.5 * (times[1] - times[0]);
  for (std::size_t i = 1; i + 1 < p; ++i) w[i] = 0.5 * (times[i + 1] - times[i - 1]);
  w[p - 1] = 0.5 * (times[p - 1] - times[p - 2]);
}

}  // namespace detail

// Occupation-coordinate engine for one (basis, n, spacetime, grid) tuple.
// Shared read-only across workers; per-call scratch keeps it thread-safe.
class OccupationEngine {
 public:
  struct Scratch {
    std::vector<double> px, py, M, w;
  };

  OccupationEngine(BasisSpec spec, std::size_t n, bool spacetime)
      : spec_(spec), n_(n), spacetime_(spacetime) {
    if (n_ == 0) return;
    if (spec_.kind == BasisKind::hermite_plane_tensor || spec_.kind == BasisKind::scaled_plane)
      pairs_ = plane_pairs(n_, spec_.ordering);
    else if (spec_.kind == BasisKind::bridge_strip)
      pairs_ = strip_pairs(n_, spec_.strip_kappa);
    else
      max_deg_ = static_cast<int>(n_);  // line: degrees 0..n-1; circle handled generically
    if (!pairs_.empty()) {
      for (const PlanePair& p : pairs_) {
        xdeg_ = std::max(xdeg_, p.a);
        tdeg_ = std::max(tdeg_, p.b);
      }
      max_deg_ = std::max(xdeg_, tdeg_);
      // Per spatial degree, the highest second index present; the inner
      // accumulation loops only cover pairs the extraction will read.
      blim_.assign(static_cast<std::size_t>(xdeg_) + 1, -1);
      for (const PlanePair& p : pairs_)
        blim_[static_cast<std::size_t>(p.a)] = std::max(blim_[static_cast<std::size_t>(p.a)], p.b);
    }
  }

  // Precomputes the weighted time-axis table for spacetime integrals over a
  // fixed grid: table[i*(D+1)+b] = w_i * f_b(times[i]) with f_b the time
  // factor of the tensor (Hermite, or normalized Legendre for the strip
  // family, where the per-point 1/sqrt(s_i) also folds in). xscale_[i] and
  // xoff_[i] map the spatial value to the Hermite argument x*xscale - xoff.
  void bind_grid(const std::vector<double>& times) {
    if (!spacetime_) return;
    if (spec_.kind != BasisKind::hermite_plane_tensor && spec_.kind != BasisKind::bridge_strip)
      throw std::invalid_argument("occupation engine: spacetime needs a strip or tensor basis");
    grid_times_ = times;
    std::vector<double> w;
    detail::trapezoid_weights(times, w);
    const std::size_t stride = static_cast<std::size_t>(tdeg_) + 1;
    time_table_.assign(times.size() * stride, 0.0);
    xscale_.assign(times.size(), 1.0);
    xoff_.assign(times.size(), 0.0);
    std::vector<double> col(stride);
    if (spec_.kind == BasisKind::bridge_strip) {
      const double T = spec_.strip_T;
      if (times.front() < -1e-12 * T || times.back() > T * (1.0 + 1e-12))
        throw std::invalid_argument("occupation engine: grid leaves the strip [0, T]");
      for (std::size_t i = 0; i < times.size(); ++i) {
        double tau = std::clamp(times[i], 0.0, T);
        double s = strip_scale(spec_, tau);
        xscale_[i] = 1.0 / s;
        xoff_[i] = strip_offset(spec_, tau) / s;
        legendre_time_block(tau, T, tdeg_, col.data());
        double f = w[i] / std::sqrt(s);
        for (std::size_t b = 0; b < stride; ++b) time_table_[i * stride + b] = f * col[b];
      }
    } else {
      for (std::size_t i = 0; i < times.size(); ++i) {
        hermite_function_block(times[i], tdeg_, col.data());
        for (std::size_t b = 0; b < stride; ++b) time_table_[i * stride + b] = w[i] * col[b];
      }
    }
  }

  std::size_t n() const { return n_; }
  const BasisSpec& spec() const { return spec_; }

  void coords(const PathSample& path, std::span<double> out, Scratch& ws) const {
    if (out.size() < n_) throw std::invalid_argument("occupation coords: output too small");
    const int pdim = path.meta.dim;
    const int bdim = basis_dimension(spec_);
    if (bdim != pdim + (spacetime_ ? 1 : 0))
      throw std::invalid_argument("occupation coords: basis/path dimension mismatch");
    if (n_ == 0) return;
    if (!spacetime_) {
      coords_range(path, 0, path.size() - 1, out, ws);
      return;
    }

    const std::size_t pts = path.size();
    if (time_table_.empty() || grid_times_.size() != pts || grid_times_.back() != path.times.back())
      throw std::invalid_argument("occupation coords: engine not bound to this grid");
    coords_spacetime_values(std::span<const double>(path.points.data(), pts), out, ws);
  }

  // Coordinates of the occupation measure restricted to grid indices
  // [i0, i1], with trapezoid weights local to the sub-range. Spatial bases
  // only; a spacetime engine is tied to its full bound grid.
  void coords_range(const PathSample& path, std::size_t i0, std::size_t i1, std::span<double> out,
                    Scratch& ws) const {
    if (spacetime_) throw std::invalid_argument("occupation coords_range: spatial bases only");
    if (out.size() < n_) throw std::invalid_argument("occupation coords: output too small");
    if (i1 >= path.size() || i0 > i1)
      throw std::invalid_argument("occupation coords_range: bad index range");
    if (n_ == 0) return;
    const std::size_t cnt = i1 - i0 + 1;
    const std::size_t stride = static_cast<std::size_t>(max_deg_) + 1;

    ws.w.resize(cnt);
    if (cnt == 1) {
      ws.w[0] = 0.0;
    } else {
      ws.w[0] = 0.5 * (path.times[i0 + 1] - path.times[i0]);
      for (std::size_t k = 1; k + 1 < cnt; ++k)
        ws.w[k] = 0.5 * (path.times[i0 + k + 1] - path.times[i0 + k - 1]);
      ws.w[cnt - 1] = 0.5 * (path.times[i1] - path.times[i1 - 1]);
    }

    switch (spec_.kind) {
      case BasisKind::hermite_line: {
        ws.px.resize(stride);
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n_), 0.0);
        for (std::size_t k = 0; k < cnt; ++k) {
          double x = path.points[i0 + k];
          hermite_poly_block(x, max_deg_ - 1, ws.px.data());
          double f = ws.w[k] * hermite_gauss_factor(x);
          for (std::size_t j = 0; j < n_; ++j) out[j] += f * ws.px[j];
        }
        return;
      }
      case BasisKind::fourier_circle: {
        // Indices 0..n-1 including the constant element.
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n_), 0.0);
        for (std::size_t k = 0; k < cnt; ++k)
          for (std::size_t j = 0; j < n_; ++j)
            out[j] += ws.w[k] * circle_element(j, path.points[i0 + k]);
        return;
      }
      case BasisKind::hermite_plane_tensor:
      case BasisKind::scaled_plane: {
        const double N = spec_.kind == BasisKind::scaled_plane ? spec_.scale_N : 1.0;
        const double sx = 1.0 / std::sqrt(N), sy = 1.0 / (N * std::sqrt(N));
        const std::size_t tstride = static_cast<std::size_t>(tdeg_) + 1;
        ws.px.resize(static_cast<std::size_t>(xdeg_) + 1);
        ws.py.resize(tstride);
        ws.M.assign((static_cast<std::size_t>(xdeg_) + 1) * tstride, 0.0);
        for (std::size_t k = 0; k < cnt; ++k) {
          double x = path.coord(i0 + k, 0) * sx;
          double y = path.coord(i0 + k, 1) * sy;
          hermite_poly_block(x, xdeg_, ws.px.data());
          hermite_poly_block(y, tdeg_, ws.py.data());
          double f = ws.w[k] * hermite_gauss_factor(x) * hermite_gauss_factor(y);
          for (int a = 0; a <= xdeg_; ++a) {
            const int bl = blim_[static_cast<std::size_t>(a)];
            if (bl < 0) continue;
            double ca = f * ws.px[static_cast<std::size_t>(a)];
            double* mrow = &ws.M[static_cast<std::size_t>(a) * tstride];
            for (int b = 0; b <= bl; ++b) mrow[b] += ca * ws.py[static_cast<std::size_t>(b)];
          }
        }
        const double scale = 1.0 / N;
        for (std::size_t j = 0; j < n_; ++j)
          out[j] = scale * ws.M[static_cast<std::size_t>(pairs_[j].a) * tstride +
                                static_cast<std::size_t>(pairs_[j].b)];
        return;
      }
      case BasisKind::bridge_strip: {
        // Spatial use of the strip family: the second path coordinate plays
        // the fiber variable. Points outside [0, T] contribute nothing (the
        // elements extend by zero), so a path may leave the strip.
        const double T = spec_.strip_T;
        const std::size_t tstride = static_cast<std::size_t>(tdeg_) + 1;
        ws.px.resize(static_cast<std::size_t>(xdeg_) + 1);
        ws.py.resize(tstride);
        ws.M.assign((static_cast<std::size_t>(xdeg_) + 1) * tstride, 0.0);
        for (std::size_t k = 0; k < cnt; ++k) {
          double tau = path.coord(i0 + k, 1);
          if (tau < 0.0 || tau > T) continue;
          const double s = strip_scale(spec_, tau);
          double x = (path.coord(i0 + k, 0) - strip_offset(spec_, tau)) / s;
          hermite_poly_block(x, xdeg_, ws.px.data());
          legendre_time_block(tau, T, tdeg_, ws.py.data());
          double f = ws.w[k] * hermite_gauss_factor(x) / std::sqrt(s);
          for (int a = 0; a <= xdeg_; ++a) {
            const int bl = blim_[static_cast<std::size_t>(a)];
            if (bl < 0) continue;
            double ca = f * ws.px[static_cast<std::size_t>(a)];
            double* mrow = &ws.M[static_cast<std::size_t>(a) * tstride];
            for (int b = 0; b <= bl; ++b) mrow[b] += ca * ws.py[static_cast<std::size_t>(b)];
          }
        }
        for (std::size_t j = 0; j < n_; ++j)
          out[j] = ws.M[static_cast<std::size_t>(pairs_[j].a) * tstride +
                        static_cast<std::size_t>(pairs_[j].b)];
        return;
      }
    }
    throw std::invalid_argument("occupation coords: unknown basis kind");
  }

  // Spacetime variant for a 1-d path given directly as an array of values on
  // the bound grid (avoids materializing a PathSample in hot loops).
  void coords_spacetime_values(std::span<const double> values, std::span<double> out,
                               Scratch& ws) const {
    const std::size_t pts = values.size();
    const std::size_t stride = static_cast<std::size_t>(tdeg_) + 1;
    if (!spacetime_ || time_table_.size() != pts * stride)
      throw std::invalid_argument("occupation coords: engine not bound to this grid");
    ws.px.resize(static_cast<std::size_t>(xdeg_) + 1);
    ws.M.assign((static_cast<std::size_t>(xdeg_) + 1) * stride, 0.0);
    for (std::size_t i = 0; i < pts; ++i) {
      double x = values[i] * xscale_[i] - xoff_[i];
      hermite_poly_block(x, xdeg_, ws.px.data());
      double g = hermite_gauss_factor(x);
      const double* trow = &time_table_[i * stride];
      for (int a = 0; a <= xdeg_; ++a) {
        const int bl = blim_[static_cast<std::size_t>(a)];
        if (bl < 0) continue;
        double ca = g * ws.px[static_cast<std::size_t>(a)];
        double* mrow = &ws.M[static_cast<std::size_t>(a) * stride];
        for (int b = 0; b <= bl; ++b) mrow[b] += ca * trow[b];
      }
    }
    for (std::size_t j = 0; j < n_; ++j)
      out[j] = ws.M[static_cast<std::size_t>(pairs_[j].a) * stride +
                    static_cast<std::size_t>(pairs_[j].b)];
  }

 private:
  BasisSpec spec_;
  std::size_t n_;
  bool spacetime_;
  std::vector<PlanePair> pairs_;
  int max_deg_ = 0;        // single-axis kinds
  int xdeg_ = 0, tdeg_ = 0;  // per-axis degree caps for pair kinds
  std::vector<int> blim_;    // max second index per first index
  std::vector<double> grid_times_;
  std::vector<double> time_table_;
  std::vector<double> xscale_;
  std::vector<double> xoff_;
};

inline OccupationCoordinates occupation_coords(const PathSample& path, const BasisSpec& spec,
                                               std::size_t n, bool spacetime) {
  OccupationEngine engine(spec, n, spacetime);
  if (spacetime) engine.bind_grid(path.times);
  OccupationCoordinates oc;
  oc.m.resize(n);
  oc.basis = spec;
  oc.spacetime = spacetime;
  oc.path_meta = path.meta;
  OccupationEngine::Scratch ws;
  engine.coords(path, oc.m, ws);
  return oc;
}

// Grid restriction of sup |B(t)-B(s)| / (t-s)^kappa over all sample pairs.
inline double holder_norm(const PathSample& path, double kappa) {
  if (!(kappa > 0.0 && kappa < 0.5))
    throw std::invalid_argument("holder_norm: kappa must lie in (0, 1/2)");
  if (path.size() == 0) throw std::invalid_argument("holder_norm: empty path");
  const std::size_t pts = path.size();
  const int dim = path.meta.dim;
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < pts; ++i)
    for (std::size_t j = i + 1; j < pts; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < dim; ++c) {
        double d = path.coord(j, c) - path.coord(i, c);
        d2 += d * d;
      }
      double dt = path.times[j] - path.times[i];
      if (dt <= 0.0) continue;
      best = std::max(best, std::sqrt(d2) / std::pow(dt, kappa));
    }
  return best;
}

// Max over epsilon-grid boxes of how many sample times delta*i (i >= 0,
// delta*i <= horizon) land in the box. Boxes are half-open [k eps,(k+1) eps)
// per axis; off-grid query times are linearly interpolated on the path grid.
inline std::size_t box_count(const PathSample& path, double eps, double delta) {
  if (path.meta.dim != 2) throw std::invalid_argument("box_count: planar path required");
  if (!(eps > 0.0) || !(delta > 0.0)) throw std::invalid_argument("box_count: eps, delta > 0");
  const double t = path.times.back();
  if (delta > t + 1e-12) throw std::invalid_argument("box_count: delta exceeds horizon");
  std::map<std::pair<long long, long long>, std::size_t> boxes;
  std::size_t imax = static_cast<std::size_t>(std::floor(t / delta + 1e-9));
  std::size_t cursor = 0;
  std::size_t best = 0;
  for (std::size_t i = 0; i <= imax; ++i) {
    double s = std::min(delta * static_cast<double>(i), t);
    while (cursor + 1 < path.size() && path.times[cursor + 1] < s) ++cursor;
    double x, y;
    if (cursor + 1 >= path.size()) {
      x = path.coord(path.size() - 1, 0);
      y = path.coord(path.size() - 1, 1);
    } else {
      double t0 = path.times[cursor], t1 = path.times[cursor + 1];
      double lam = t1 > t0 ? (s - t0) / (t1 - t0) : 0.0;
      lam = std::clamp(lam, 0.0, 1.0);
      x = path.coord(cursor, 0) + lam * (path.coord(cursor + 1, 0) - path.coord(cursor, 0));
      y = path.coord(cursor, 1) + lam * (path.coord(cursor + 1, 1) - path.coord(cursor, 1));
    }
    auto key = std::make_pair(static_cast<long long>(std::floor(x / eps)),
                              static_cast<long long>(std::floor(y / eps)));
    best = std::max(best, ++boxes[key]);
  }
  return best;
}

// Continuous-time chain: exact exponential holding times from the jump rates.
// points hold state indices; occupation times are exact sums of segment
// lengths, no grid quadrature involved.
inline void validate_generator(const std::vector<std::vector<double>>& K) {
  const std::size_t d = K.size();
  if (d < 1) throw std::invalid_argument("chain: empty generator");
  for (std::size_t i = 0; i < d; ++i) {
    if (K[i].size() != d) throw std::invalid_argument("chain: generator must be square");
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (i != j && K[i][j] < 0.0)
        throw std::invalid_argument("chain: negative off-diagonal rate");
      row += K[i][j];
    }
    if (std::abs(row) > 1e-9) throw std::invalid_argument("chain: generator rows must sum to 0");
  }
}

inline PathSample sample_chain(const std::vector<std::vector<double>>& K, std::size_t start,
                               double t, std::uint64_t seed) {
  validate_generator(K);
  const std::size_t d = K.size();
  if (start >= d) throw std::invalid_argument("sample_chain: start state out of range");
  if (t < 0.0) throw std::invalid_argument("sample_chain: negative horizon");

  PathSample s;
  s.meta = PathMeta{LawKind::chain, 1, {static_cast<double>(start)}, {}, {}, {}, t, 0, seed};
  RngStream rng(seed);
  double now = 0.0;
  std::size_t state = start;
  s.times.push_back(0.0);
  s.points.push_back(static_cast<double>(state));
  while (true) {
    double rate = -K[state][state];
    if (rate <= 0.0) break;  // absorbing
    double hold = -std::log(rng.uniform()) / rate;
    if (now + hold >= t) break;
    now += hold;
    double u = rng.uniform() * rate;
    std::size_t next = state;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (j == state) continue;
      acc += K[state][j];
      if (u <= acc) {
        next = j;
        break;
      }
    }
    state = next;
    s.times.push_back(now);
    s.points.push_back(static_cast<double>(state));
    s.meta.steps += 1;
  }
  if (t > 0.0) {
    s.times.push_back(t);
    s.points.push_back(static_cast<double>(state));
  }
  return s;
}

// X(z) = total time the chain spends in state z; exact from jump times.
inline std::vector<double> chain_occupation(const PathSample& path, std::size_t d) {
  if (path.meta.law != LawKind::chain)
    throw std::invalid_argument("chain_occupation: not a chain path");
  std::vector<double> occ(d, 0.0);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto z = static_cast<std::size_t>(path.points[i]);
    if (z >= d) throw std::invalid_argument("chain_occupation: state out of range");
    occ[z] += path.times[i + 1] - path.times[i];
  }
  return occ;
}

}  // namespace wickflow
