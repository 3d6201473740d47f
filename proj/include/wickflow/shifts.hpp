#pragma once

// Randomized-shift partition functions Z_n = E_Q exp(sum_j m_j xi_j - m_j^2/2)
// and their moment identities, with shift samplers for path occupation
// coordinates, the Gaussian multiplicative chaos on the circle, point-mass
// Bayes shifts, and fixed vectors. All exponential averages accumulate in the
// log domain and shift by the block maximum before exponentiating.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "wickflow/mc.hpp"
#include "wickflow/parallel.hpp"
#include "wickflow/paths.hpp"
#include "wickflow/rng.hpp"

namespace wickflow {

// One Q-draw: the seed that generated it plus its coordinate vector. The seed
// lets predicates and observables reconstruct richer draw data (e.g. the full
// path behind an occupation draw) without widening this interface.
struct QDraw {
  std::uint64_t seed = 0;
  std::span<const double> m;
};

class ShiftSampler {
 public:
  virtual ~ShiftSampler() = default;
  virtual std::size_t dim() const = 0;  // length of every drawn m vector
  virtual void draw(std::uint64_t seed, std::span<double> m) const = 0;
  virtual std::string kind() const = 0;
};

struct PathShiftConfig {
  LawKind law = LawKind::bridge;
  int dim = 1;
  std::vector<double> start{0.0};
  std::vector<double> end{0.0};    // bridge
  std::vector<double> drift{0.0};  // motion
  std::vector<double> cov{1.0};
  double horizon = 1.0;
  bool spacetime = true;
  std::size_t steps = 0;  // 0 -> coupled default 16*n
  GridKind grid = GridKind::uniform;
};

// m_j = trapezoid integral of e_j along a freshly sampled path. Draws with
// the same seed regenerate the same path, hence the same coordinates.
class PathOccupationShift final : public ShiftSampler {
 public:
  PathOccupationShift(PathShiftConfig cfg, BasisSpec basis, std::size_t n)
      : cfg_(std::move(cfg)), n_(n), engine_(basis, n, cfg_.spacetime) {
    if (cfg_.spacetime && basis.kind == BasisKind::bridge_strip &&
        std::abs(basis.strip_T - cfg_.horizon) > 1e-12 * std::max(1.0, cfg_.horizon))
      throw std::invalid_argument("path-occupation shift: strip horizon != path horizon");
    if (cfg_.steps == 0) cfg_.steps = 16 * std::max<std::size_t>(n, 1);
    grid_ = make_grid(cfg_.grid, cfg_.horizon, cfg_.steps);
    if (cfg_.spacetime) engine_.bind_grid(grid_);
  }

  std::size_t dim() const override { return n_; }
  std::string kind() const override { return "path-occupation"; }

  PathSample sample_path(std::uint64_t seed) const {
    PathSample p;
    sample_into(p, seed);
    return p;
  }

  void draw(std::uint64_t seed, std::span<double> m) const override {
    thread_local PathSample path;
    thread_local OccupationEngine::Scratch ws;
    sample_into(path, seed);
    engine_.coords(path, m, ws);
  }

  const PathShiftConfig& config() const { return cfg_; }
  const BasisSpec& basis() const { return engine_.spec(); }

 private:
  void sample_into(PathSample& p, std::uint64_t seed) const {
    if (cfg_.law == LawKind::bridge)
      sample_bridge_grid_into(p, cfg_.dim, cfg_.start, cfg_.end, grid_, cfg_.cov, seed);
    else if (cfg_.law == LawKind::motion)
      sample_motion_grid_into(p, cfg_.dim, cfg_.start, cfg_.drift, grid_, cfg_.cov, seed);
    else
      throw std::invalid_argument("path-occupation shift: law must be bridge or motion");
  }

  PathShiftConfig cfg_;
  std::size_t n_;
  OccupationEngine engine_;
  std::vector<double> grid_;
};

// Circle chaos coordinates m_{2k-1} = gamma cos(k w)/sqrt(k/2),
// m_{2k} = gamma sin(k w)/sqrt(k/2) for one uniform angle w per draw.
class CircleGmcShift final : public ShiftSampler {
 public:
  CircleGmcShift(double gamma, std::size_t n) : gamma_(gamma), n_(n) {
    if (gamma < 0.0) throw std::invalid_argument("circle-gmc: gamma must be >= 0");
    scale_.resize(n_ / 2 + 2);
    for (std::size_t k = 1; k < scale_.size(); ++k)
      scale_[k] = gamma / std::sqrt(static_cast<double>(k) / 2.0);
  }

  std::size_t dim() const override { return n_; }
  std::string kind() const override { return "circle-gmc"; }
  double gamma() const { return gamma_; }

  void draw(std::uint64_t seed, std::span<double> m) const override {
    RngStream rng(seed);
    const double w = kTwoPi * rng.uniform();
    const double c1 = std::cos(w), s1 = std::sin(w);
    // rotation recurrence for cos(kw), sin(kw)
    double ck = 1.0, sk = 0.0;
    std::size_t j = 0;
    std::size_t k = 0;
    while (j < n_) {
      ++k;
      double cn = ck * c1 - sk * s1;
      double sn = sk * c1 + ck * s1;
      ck = cn;
      sk = sn;
      m[j++] = scale_[k] * ck;
      if (j < n_) m[j++] = scale_[k] * sk;
    }
  }

 private:
  double gamma_;
  std::size_t n_;
  std::vector<double> scale_;
};

// Prior concentrated at a single mean value: every coordinate shifts by the
// same constant, with no Q randomness at all.
class BayesPointMassShift final : public ShiftSampler {
 public:
  BayesPointMassShift(double theta, std::size_t n) : theta_(theta), n_(n) {}
  std::size_t dim() const override { return n_; }
  std::string kind() const override { return "bayes-point-mass"; }
  void draw(std::uint64_t, std::span<double> m) const override {
    std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_), theta_);
  }

 private:
  double theta_;
  std::size_t n_;
};

class DeterministicShift final : public ShiftSampler {
 public:
  explicit DeterministicShift(std::vector<double> m) : m_(std::move(m)) {}
  std::size_t dim() const override { return m_.size(); }
  std::string kind() const override { return "deterministic"; }
  void draw(std::uint64_t, std::span<double> m) const override {
    std::copy(m_.begin(), m_.end(), m.begin());
  }

 private:
  std::vector<double> m_;
};

inline double shift_log_weight(std::span<const double> m, std::span<const double> xi,
                               std::size_t n) {
  CompensatedSum s;
  for (std::size_t j = 0; j < n; ++j) s.add(m[j] * (xi[j] - 0.5 * m[j]));
  return s.value();
}

namespace detail {
struct ShiftScratch {
  std::vector<double> m;
  std::vector<double> logs;
};
}  // namespace detail

// Z_n(xi) estimated over q_reps Q-draws. Positive by construction; the
// log-sum-exp shift guards the exponentials.
inline MCEstimate partition_Zn(const ShiftSampler& shift, std::span<const double> xi,
                               std::size_t q_reps, std::uint64_t seed, int workers = 1) {
  const std::size_t n = xi.size();
  if (n > shift.dim()) throw std::invalid_argument("partition_Zn: xi longer than shift draws");
  if (q_reps < 2) throw std::invalid_argument("partition_Zn: need q_reps >= 2");
  std::vector<double> logs = replica_map<double>(q_reps, workers, [&](std::size_t q) {
    thread_local std::vector<double> m;
    m.resize(shift.dim());
    shift.draw(derive_seed(seed, q), m);
    return shift_log_weight(m, xi, n);
  });
  double lmax = -std::numeric_limits<double>::infinity();
  for (double l : logs) lmax = std::max(lmax, l);
  std::vector<double> w(logs.size());
  for (std::size_t q = 0; q < logs.size(); ++q) w[q] = std::exp(logs[q] - lmax);
  MCEstimate e = estimate_from_samples(w, n, seed, "partition_Zn", true);
  double scale = std::exp(lmax);
  e.mean *= scale;
  e.std_err *= scale;
  return e;
}

// E_P[Z_n] - 1 with a fresh Q-pool per P-replica, so the replica scatter
// carries both noise sources and the z test is honest.
inline MCEstimate mean_one_residual(const ShiftSampler& shift, std::size_t n, std::size_t p_reps,
                                    std::size_t q_reps, std::uint64_t seed, int workers = 1) {
  if (n > shift.dim()) throw std::invalid_argument("mean_one_residual: n exceeds shift dim");
  std::vector<double> vals = replica_map<double>(p_reps, workers, [&](std::size_t i) {
    const std::uint64_t seed_i = derive_seed(seed, i);
    RngStream rng(seed_i);
    thread_local std::vector<double> xi, m, logs;
    xi.resize(n);
    m.resize(shift.dim());
    logs.resize(q_reps);
    for (std::size_t j = 0; j < n; ++j) xi[j] = rng.gaussian();
    if (n == 0) return 0.0;  // Z_0 = 1 exactly
    double lmax = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < q_reps; ++q) {
      shift.draw(derive_seed(seed_i, q + 1), m);
      logs[q] = shift_log_weight(m, xi, n);
      lmax = std::max(lmax, logs[q]);
    }
    CompensatedSum s;
    for (std::size_t q = 0; q < q_reps; ++q) s.add(std::exp(logs[q] - lmax));
    return std::exp(lmax) * s.value() / static_cast<double>(q_reps) - 1.0;
  });
  return estimate_from_samples(vals, n, seed, "mean_one_residual", true);
}

// Two independent estimators of E_P[Z_n^2] = E_{Q x Q} exp(sum m_i m_i'):
// (i) nested, with the unbiased U-statistic over distinct Q-pairs per xi;
// (ii) direct pairing of independent draws. pair_reps = 0 reuses reps; the
// two estimators keep separate replica budgets because one nested replica
// costs q_reps draws while one paired replica costs two.
inline std::pair<MCEstimate, MCEstimate> second_moment(const ShiftSampler& shift, std::size_t n,
                                                       std::size_t reps, std::uint64_t seed,
                                                       std::size_t q_reps = 64, int workers = 1,
                                                       std::size_t pair_reps = 0) {
  if (n > shift.dim()) throw std::invalid_argument("second_moment: n exceeds shift dim");
  if (q_reps < 2) throw std::invalid_argument("second_moment: need q_reps >= 2");
  if (pair_reps == 0) pair_reps = reps;
  const std::uint64_t seed_nested = derive_seed(seed, 1);
  const std::uint64_t seed_paired = derive_seed(seed, 2);

  std::vector<double> nested = replica_map<double>(reps, workers, [&](std::size_t i) {
    const std::uint64_t seed_i = derive_seed(seed_nested, i);
    RngStream rng(seed_i);
    thread_local std::vector<double> xi, m, logs;
    xi.resize(n);
    m.resize(shift.dim());
    logs.resize(q_reps);
    for (std::size_t j = 0; j < n; ++j) xi[j] = rng.gaussian();
    double lmax = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < q_reps; ++q) {
      shift.draw(derive_seed(seed_i, q + 1), m);
      logs[q] = shift_log_weight(m, xi, n);
      lmax = std::max(lmax, logs[q]);
    }
    CompensatedSum s1, s2;
    for (std::size_t q = 0; q < q_reps; ++q) {
      double w = std::exp(logs[q] - lmax);
      s1.add(w);
      s2.add(w * w);
    }
    const double qr = static_cast<double>(q_reps);
    double u = (s1.value() * s1.value() - s2.value()) / (qr * (qr - 1.0));
    double scale = std::exp(lmax);
    return scale * scale * u;
  });

  std::vector<double> paired = replica_map<double>(pair_reps, workers, [&](std::size_t i) {
    thread_local std::vector<double> ma, mb;
    ma.resize(shift.dim());
    mb.resize(shift.dim());
    shift.draw(derive_seed(seed_paired, 2 * i), ma);
    shift.draw(derive_seed(seed_paired, 2 * i + 1), mb);
    CompensatedSum dot;
    for (std::size_t j = 0; j < n; ++j) dot.add(ma[j] * mb[j]);
    return std::exp(dot.value());
  });

  return {estimate_from_samples(nested, n, seed, "second_moment_nested", true),
          estimate_from_samples(paired, n, seed, "second_moment_paired", true)};
}

namespace detail {
struct SignedLogGamma {
  double log_abs;
  int sign;
};

// Gamma through logs; negative non-integer arguments via the reflection
// formula Gamma(z) = pi / (sin(pi z) Gamma(1-z)).
inline SignedLogGamma signed_log_gamma(double z) {
  if (z > 0.0) return {std::lgamma(z), 1};
  if (z == std::floor(z)) throw std::domain_error("signed_log_gamma: pole at nonpositive integer");
  double s = std::sin(kPi * z);
  return {std::log(kPi) - std::log(std::abs(s)) - std::lgamma(1.0 - z), s > 0.0 ? 1 : -1};
}
}  // namespace detail

// Closed form 2 Gamma(-2g^2) / (Gamma(1-g^2) Gamma(-g^2)) for g < 1/sqrt(2).
// Arguments within 1e-8 of the critical line count as divergent: the formula
// blows up through the Gamma(-1) pole there and the defining integral is
// infinite for g >= 1/sqrt(2).
inline double circle_intersection_exponential(double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("circle_intersection_exponential: gamma >= 0");
  if (2.0 * gamma * gamma >= 1.0 - 1e-8)
    throw std::domain_error("circle_intersection_exponential: divergent for gamma >= 1/sqrt(2)");
  if (gamma == 0.0) return 1.0;
  const double g2 = gamma * gamma;
  auto a = detail::signed_log_gamma(-2.0 * g2);
  auto b = detail::signed_log_gamma(1.0 - g2);
  auto c = detail::signed_log_gamma(-g2);
  double log_val = std::log(2.0) + a.log_abs - b.log_abs - c.log_abs;
  return static_cast<double>(a.sign * b.sign * c.sign) * std::exp(log_val);
}

// Same quantity as the closed form, through the defining circle average
// (1/2pi) int_0^2pi |2 sin(s/2)|^{-2 g^2} ds. The integrand blows up at the
// endpoints; tanh-sinh nodes cluster there, and symmetry halves the range so
// only the s = 0 singularity is in play.
inline double circle_intersection_quadrature(double gamma, double tolerance = 1e-12) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("circle_intersection_quadrature: gamma >= 0");
  if (2.0 * gamma * gamma >= 1.0 - 1e-8)
    throw std::domain_error("circle_intersection_quadrature: divergent for gamma >= 1/sqrt(2)");
  if (gamma == 0.0) return 1.0;
  const double p = -2.0 * gamma * gamma;
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [p](double s) { return std::pow(2.0 * std::sin(0.5 * s), p); };
  return integrator.integrate(f, 0.0, kPi, tolerance) / kPi;
}

// E_P |Z_n(m) - Z_n(1_A m)| with shared randomness, plus the empirical
// Q(A^c) from the same draw pool. The bound being verified is
// gap <= 2 Q(A^c) (+ statistical slack).
struct TruncationGap {
  MCEstimate gap;
  double q_complement = 0.0;
};

inline TruncationGap truncation_gap(const ShiftSampler& shift,
                                    const std::function<bool(const QDraw&)>& event, std::size_t n,
                                    std::size_t p_reps, std::size_t q_reps, std::uint64_t seed,
                                    int workers = 1) {
  if (n > shift.dim()) throw std::invalid_argument("truncation_gap: n exceeds shift dim");
  if (!event) throw std::invalid_argument("truncation_gap: missing event");
  struct RepResult {
    double gap;
    std::size_t fails;
  };
  std::vector<RepResult> results = replica_map<RepResult>(p_reps, workers, [&](std::size_t i) {
    const std::uint64_t seed_i = derive_seed(seed, i);
    RngStream rng(seed_i);
    thread_local std::vector<double> xi, m;
    xi.resize(n);
    m.resize(shift.dim());
    for (std::size_t j = 0; j < n; ++j) xi[j] = rng.gaussian();
    CompensatedSum z_full, z_trunc;
    std::size_t fails = 0;
    for (std::size_t q = 0; q < q_reps; ++q) {
      const std::uint64_t seed_q = derive_seed(seed_i, q + 1);
      shift.draw(seed_q, m);
      double l = shift_log_weight(m, xi, n);
      double w = std::exp(l);
      z_full.add(w);
      if (event(QDraw{seed_q, std::span<const double>(m.data(), n)})) {
        z_trunc.add(w);
      } else {
        z_trunc.add(1.0);  // truncated draw has m = 0, weight exp(0)
        ++fails;
      }
    }
    double qr = static_cast<double>(q_reps);
    return RepResult{std::abs(z_full.value() - z_trunc.value()) / qr, fails};
  });
  std::vector<double> gaps(results.size());
  std::size_t fails = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    gaps[i] = results[i].gap;
    fails += results[i].fails;
  }
  TruncationGap out;
  out.gap = estimate_from_samples(gaps, n, seed, "truncation_gap", true);
  out.q_complement =
      static_cast<double>(fails) / (static_cast<double>(p_reps) * static_cast<double>(q_reps));
  return out;
}

// Unnormalized polymer average E_Q[F(draw) exp(sum m_j xi_j - m_j^2/2)].
inline MCEstimate polymer_expectation(const ShiftSampler& shift, std::span<const double> xi,
                                      const std::function<double(const QDraw&)>& observable,
                                      std::size_t q_reps, std::uint64_t seed, int workers = 1) {
  const std::size_t n = xi.size();
  if (n > shift.dim()) throw std::invalid_argument("polymer_expectation: xi too long");
  if (!observable) throw std::invalid_argument("polymer_expectation: missing observable");
  struct Sample {
    double log_w;
    double f;
  };
  std::vector<Sample> samples = replica_map<Sample>(q_reps, workers, [&](std::size_t q) {
    thread_local std::vector<double> m;
    m.resize(shift.dim());
    const std::uint64_t seed_q = derive_seed(seed, q);
    shift.draw(seed_q, m);
    return Sample{shift_log_weight(m, xi, n),
                  observable(QDraw{seed_q, std::span<const double>(m.data(), n)})};
  });
  double lmax = -std::numeric_limits<double>::infinity();
  for (const Sample& s : samples) lmax = std::max(lmax, s.log_w);
  std::vector<double> vals(samples.size());
  for (std::size_t q = 0; q < samples.size(); ++q)
    vals[q] = samples[q].f * std::exp(samples[q].log_w - lmax);
  MCEstimate e = estimate_from_samples(vals, n, seed, "polymer_expectation", true);
  double scale = std::exp(lmax);
  e.mean *= scale;
  e.std_err *= scale;
  return e;
}

// LHS - RHS of E_P E_{M_xi} F(xi, w) = E_{P x Q} F(xi + m(w), w), with the
// same xi and the same Q-draws on both sides.
inline MCEstimate shift_identity_residual(
    const ShiftSampler& shift,
    const std::function<double(std::span<const double>, const QDraw&)>& F, std::size_t p_reps,
    std::size_t q_reps, std::uint64_t seed, int workers = 1) {
  if (!F) throw std::invalid_argument("shift_identity_residual: missing F");
  const std::size_t n = shift.dim();
  std::vector<double> vals = replica_map<double>(p_reps, workers, [&](std::size_t i) {
    const std::uint64_t seed_i = derive_seed(seed, i);
    RngStream rng(seed_i);
    thread_local std::vector<double> xi, m, shifted;
    xi.resize(n);
    m.resize(n);
    shifted.resize(n);
    for (std::size_t j = 0; j < n; ++j) xi[j] = rng.gaussian();
    CompensatedSum lhs, rhs;
    for (std::size_t q = 0; q < q_reps; ++q) {
      const std::uint64_t seed_q = derive_seed(seed_i, q + 1);
      shift.draw(seed_q, m);
      QDraw d{seed_q, std::span<const double>(m.data(), n)};
      lhs.add(F(xi, d) * std::exp(shift_log_weight(m, xi, n)));
      for (std::size_t j = 0; j < n; ++j) shifted[j] = xi[j] + m[j];
      rhs.add(F(shifted, d));
    }
    return (lhs.value() - rhs.value()) / static_cast<double>(q_reps);
  });
  return estimate_from_samples(vals, n, seed, "shift_identity_residual", true);
}

// q_k = E_P (Z_{k+1} - Z_k)^2 for k < n_max, each squared difference
// estimated by the unbiased U-statistic over the per-xi Q-pool.
inline std::vector<MCEstimate> martingale_increments(const ShiftSampler& shift, std::size_t n_max,
                                                     std::size_t reps, std::uint64_t seed,
                                                     std::size_t q_reps = 64, int workers = 1) {
  if (n_max < 1) throw std::invalid_argument("martingale_increments: need n_max >= 1");
  if (n_max > shift.dim())
    throw std::invalid_argument("martingale_increments: n_max exceeds shift dim");
  if (q_reps < 2) throw std::invalid_argument("martingale_increments: need q_reps >= 2");
  std::vector<std::vector<double>> rows =
      replica_map<std::vector<double>>(reps, workers, [&](std::size_t i) {
        const std::uint64_t seed_i = derive_seed(seed, i);
        RngStream rng(seed_i);
        std::vector<double> xi(n_max), m(shift.dim());
        std::vector<double> sd(n_max, 0.0), sd2(n_max, 0.0);
        for (std::size_t j = 0; j < n_max; ++j) xi[j] = rng.gaussian();
        for (std::size_t q = 0; q < q_reps; ++q) {
          shift.draw(derive_seed(seed_i, q + 1), m);
          double l = 0.0;
          double w_prev = 1.0;  // Z_0 weight
          for (std::size_t k = 0; k < n_max; ++k) {
            l += m[k] * (xi[k] - 0.5 * m[k]);
            double w = std::exp(l);
            double d = w - w_prev;
            sd[k] += d;
            sd2[k] += d * d;
            w_prev = w;
          }
        }
        const double qr = static_cast<double>(q_reps);
        std::vector<double> out(n_max);
        for (std::size_t k = 0; k < n_max; ++k)
          out[k] = (sd[k] * sd[k] - sd2[k]) / (qr * (qr - 1.0));
        return out;
      });
  std::vector<MCEstimate> result;
  result.reserve(n_max);
  std::vector<double> col(reps);
  for (std::size_t k = 0; k < n_max; ++k) {
    for (std::size_t i = 0; i < reps; ++i) col[i] = rows[i][k];
    MCEstimate e = estimate_from_samples(col, k + 1, seed,
                                         "martingale_increment_q" + std::to_string(k), true);
    result.push_back(std::move(e));
  }
  return result;
}

}  // namespace wickflow
