#pragma once

// Exactly solvable polymer models at desk scale. The continuous-time
// finite-state chain has e^{tK} as its closed-form oracle; the discrete 1+1
// lattice walk is small enough to enumerate, so partition functions and the
// Gaussian shift identity are computed exactly, no Monte Carlo involved.
//
// Lattice sites live at times 1..n_steps (space j with |j| <= i, j = i mod 2
// at time i); the start point carries no noise coordinate, so an n-step path
// visits exactly n sites and the 0-step partition function is exactly 1.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wickflow/mc.hpp"
#include "wickflow/parallel.hpp"
#include "wickflow/paths.hpp"
#include "wickflow/rng.hpp"
#include "wickflow/shifts.hpp"

namespace wickflow {

struct ChainModel {
  std::vector<std::vector<double>> K;
  std::size_t start = 0;
  double horizon = 1.0;
};

inline void validate_chain(const ChainModel& model) {
  validate_generator(model.K);
  if (model.K.size() < 2) throw std::invalid_argument("chain: need d >= 2 states");
  if (model.start >= model.K.size()) throw std::invalid_argument("chain: start out of range");
  if (model.horizon < 0.0) throw std::invalid_argument("chain: negative horizon");
}

// e^{tK} by uniformization: with u = max_z (-K_zz) and P = I + K/u,
//   e^{tK} = sum_k e^{-ut} (ut)^k / k!  P^k.
// Every P^k is stochastic, so partial sums have row sums equal to the Poisson
// mass accumulated so far; running until the tail is below 1e-16 leaves row
// sums within 1e-12 of 1 by construction.
inline std::vector<std::vector<double>> chain_transition_exact(const ChainModel& model) {
  validate_chain(model);
  const std::size_t d = model.K.size();
  std::vector<std::vector<double>> out(d, std::vector<double>(d, 0.0));
  double u = 0.0;
  for (std::size_t z = 0; z < d; ++z) u = std::max(u, -model.K[z][z]);
  const double ut = u * model.horizon;
  if (ut == 0.0) {
    for (std::size_t z = 0; z < d; ++z) out[z][z] = 1.0;
    return out;
  }
  std::vector<std::vector<double>> P(d, std::vector<double>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      P[i][j] = (i == j ? 1.0 : 0.0) + model.K[i][j] / u;

  std::vector<std::vector<double>> term(d, std::vector<double>(d, 0.0));
  for (std::size_t z = 0; z < d; ++z) term[z][z] = 1.0;  // P^0
  double log_weight = -ut;                               // log Poisson(ut) mass at k
  double mass = std::exp(log_weight);
  for (std::size_t i = 0; i < d; ++i) out[i][i] = mass;
  double accumulated = mass;
  const std::size_t kmax =
      static_cast<std::size_t>(ut + 50.0 * std::sqrt(ut + 1.0) + 50.0);
  std::vector<std::vector<double>> next(d, std::vector<double>(d));
  for (std::size_t k = 1; k <= kmax; ++k) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        CompensatedSum s;
        for (std::size_t l = 0; l < d; ++l) s.add(term[i][l] * P[l][j]);
        next[i][j] = s.value();
      }
    std::swap(term, next);
    log_weight += std::log(ut) - std::log(static_cast<double>(k));
    mass = std::exp(log_weight);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) out[i][j] += mass * term[i][j];
    accumulated += mass;
    if (1.0 - accumulated < 1e-16 && k > ut) break;
  }
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += out[i][j];
    if (std::abs(row - 1.0) > 1e-12)
      throw std::runtime_error("chain_transition_exact: series did not converge");
  }
  return out;
}

// MC estimate of E_Q[exp(sum_z X(z) xi_z - X(z)^2/2) 1(X_t = y)] over chain
// sample paths, X(z) the exact occupation time of state z.
inline MCEstimate chain_partition_mc(const ChainModel& model, std::span<const double> xi,
                                     std::size_t y, std::size_t reps, std::uint64_t seed,
                                     int workers = 1) {
  validate_chain(model);
  const std::size_t d = model.K.size();
  if (xi.size() != d) throw std::invalid_argument("chain_partition_mc: xi length != d");
  if (y >= d) throw std::invalid_argument("chain_partition_mc: target state out of range");
  std::vector<double> vals = replica_map<double>(reps, workers, [&](std::size_t i) {
    PathSample p = sample_chain(model.K, model.start, model.horizon, derive_seed(seed, i));
    if (static_cast<std::size_t>(p.points.back()) != y) return 0.0;
    std::vector<double> occ = chain_occupation(p, d);
    CompensatedSum l;
    for (std::size_t z = 0; z < d; ++z) l.add(occ[z] * (xi[z] - 0.5 * occ[z]));
    return std::exp(l.value());
  });
  return estimate_from_samples(vals, d, seed, "chain_partition_mc", true);
}

struct ChainRowEstimate {
  std::vector<MCEstimate> by_state;  // joint (xi, path) MC of the solution row
  MCEstimate total;                  // sum over target states, per replica
};

// Joint average over xi ~ P and chain paths of the partition weight split by
// final state; the means converge to the e^{tK} row of the start state, and
// the total to 1.
inline ChainRowEstimate chain_row_joint_mc(const ChainModel& model, std::size_t reps,
                                           std::uint64_t seed, int workers = 1) {
  validate_chain(model);
  const std::size_t d = model.K.size();
  std::vector<std::vector<double>> rows =
      replica_map<std::vector<double>>(reps, workers, [&](std::size_t i) {
        const std::uint64_t seed_i = derive_seed(seed, i);
        RngStream rng(derive_seed(seed_i, 1));
        std::vector<double> xi(d);
        for (std::size_t z = 0; z < d; ++z) xi[z] = rng.gaussian();
        PathSample p = sample_chain(model.K, model.start, model.horizon, derive_seed(seed_i, 2));
        std::vector<double> occ = chain_occupation(p, d);
        CompensatedSum l;
        for (std::size_t z = 0; z < d; ++z) l.add(occ[z] * (xi[z] - 0.5 * occ[z]));
        std::vector<double> row(d, 0.0);
        row[static_cast<std::size_t>(p.points.back())] = std::exp(l.value());
        return row;
      });
  ChainRowEstimate out;
  std::vector<double> col(reps);
  for (std::size_t y = 0; y < d; ++y) {
    for (std::size_t i = 0; i < reps; ++i) col[i] = rows[i][y];
    out.by_state.push_back(
        estimate_from_samples(col, d, seed, "chain_row_y" + std::to_string(y), true));
  }
  for (std::size_t i = 0; i < reps; ++i) {
    CompensatedSum s;
    for (std::size_t y = 0; y < d; ++y) s.add(rows[i][y]);
    col[i] = s.value();
  }
  out.total = estimate_from_samples(col, d, seed, "chain_row_total", true);
  return out;
}

// Site layout for the lattice walk: index(i, j) = (i-1)(i+2)/2 + (j+i)/2 for
// time i in 1..n_steps and space j reachable at time i.
class LatticeModel {
 public:
  explicit LatticeModel(int n_steps) : n_steps_(n_steps) {
    if (n_steps < 0) throw std::invalid_argument("lattice: n_steps >= 0");
    if (n_steps > 20) throw std::invalid_argument("lattice: enumeration bound is n_steps <= 20");
    for (int i = 1; i <= n_steps_; ++i)
      for (int j = -i; j <= i; j += 2) sites_.push_back({i, j});
  }

  int n_steps() const { return n_steps_; }
  std::size_t site_count() const { return sites_.size(); }
  std::pair<int, int> site(std::size_t idx) const { return sites_.at(idx); }

  std::size_t site_index(int i, int j) const {
    if (i < 1 || i > n_steps_ || j < -i || j > i || ((j + i) % 2 != 0))
      throw std::invalid_argument("lattice: not a reachable site");
    return static_cast<std::size_t>((i - 1) * (i + 2) / 2 + (j + i) / 2);
  }

  std::size_t path_count() const { return std::size_t{1} << n_steps_; }

  // Site indices visited by path `mask` (bit b set = step b goes up).
  void visited_sites(std::size_t mask, std::vector<std::size_t>& out) const {
    out.clear();
    int pos = 0;
    for (int i = 1; i <= n_steps_; ++i) {
      pos += (mask >> (i - 1)) & 1 ? 1 : -1;
      out.push_back(site_index(i, pos));
    }
  }

 private:
  int n_steps_;
  std::vector<std::pair<int, int>> sites_;
};

// Exact partition function 2^{-n} sum_paths exp(sum_visited xi_s - 1/2):
// occupation values are 0/1 so m^2 = m and each path contributes
// exp(sum_visited xi_s - n/2).
inline double lattice_partition_exact(const LatticeModel& model, std::span<const double> xi) {
  if (xi.size() != model.site_count())
    throw std::invalid_argument("lattice_partition_exact: xi length != site count");
  const int n = model.n_steps();
  if (n == 0) return 1.0;
  CompensatedSum total;
  std::vector<std::size_t> visited;
  for (std::size_t mask = 0; mask < model.path_count(); ++mask) {
    model.visited_sites(mask, visited);
    CompensatedSum l;
    for (std::size_t s : visited) l.add(xi[s]);
    total.add(std::exp(l.value() - 0.5 * n));
  }
  return total.value() / static_cast<double>(model.path_count());
}

// P-average of the exact partition function with each per-site Gaussian
// integral E[e^{xi - 1/2}] evaluated by Gauss-Hermite quadrature instead of
// its closed form; independence across sites factorizes the average per path.
// The result must be 1 + quadrature noise.
inline double lattice_mean_partition_quadrature(const LatticeModel& model, int quad_nodes = 64) {
  const int n = model.n_steps();
  if (n == 0) return 1.0;
  GaussHermiteRule rule = gauss_hermite(quad_nodes);
  double site_mean = gauss_hermite_normal_expectation(
      rule, [](double x) { return std::exp(x - 0.5); });
  // Every path visits exactly n sites, each contributing the same factor.
  return std::pow(site_mean, n);
}

// Polynomial in finitely many site coordinates, as a sum of monomials;
// total degree per term at most 4 so all Gaussian moments stay closed-form.
struct LatticePoly {
  struct Term {
    double coeff = 1.0;
    std::vector<std::pair<std::size_t, int>> factors;  // (site index, power)
  };
  std::vector<Term> terms;
};

namespace detail {

inline void validate_lattice_poly(const LatticeModel& model, const LatticePoly& F,
                                  std::vector<LatticePoly::Term>& merged) {
  merged.clear();
  for (const LatticePoly::Term& t : F.terms) {
    LatticePoly::Term m;
    m.coeff = t.coeff;
    int degree = 0;
    for (const auto& [site, pw] : t.factors) {
      if (site >= model.site_count())
        throw std::invalid_argument("lattice poly: site index out of range");
      if (pw < 1) throw std::invalid_argument("lattice poly: powers must be >= 1");
      degree += pw;
      bool found = false;
      for (auto& [ms, mp] : m.factors)
        if (ms == site) {
          mp += pw;
          found = true;
        }
      if (!found) m.factors.push_back({site, pw});
    }
    if (degree > 4)
      throw std::invalid_argument("lattice poly: total degree above 4 unsupported");
    merged.push_back(std::move(m));
  }
}

}  // namespace detail

// Both sides of the polymer shift identity E_P E_{M_xi} F = E_{P x Q} F(xi+m),
// each exact. The left side integrates F against the tilted Gaussian using
// the moment table E[xi^k e^{xi - 1/2}] = d^k/dl^k e^{l^2/2 - 1/2} at l = 1,
// i.e. {1, 1, 2, 4, 10} for k = 0..4. The right side expands E[(xi + 1)^k]
// binomially over standard normal moments {1, 0, 1, 0, 3}, giving its own
// table. Agreement of the two routes is the identity under test.
inline std::pair<double, double> lattice_shift_identity_exact(const LatticeModel& model,
                                                              const LatticePoly& F) {
  std::vector<LatticePoly::Term> terms;
  detail::validate_lattice_poly(model, F, terms);
  // E[xi^k] for xi ~ N(0,1)
  static const double plain[5] = {1.0, 0.0, 1.0, 0.0, 3.0};
  // derivatives of the moment generating function e^{l^2/2} at l = 1, times
  // the e^{-1/2} prefactor: p0..p4 = 1, l, l^2+1, l^3+3l, l^4+6l^2+3
  static const double tilted[5] = {1.0, 1.0, 2.0, 4.0, 10.0};
  // binomial expansion sum_j C(k,j) E[xi^j] 1^{k-j}
  double shifted[5];
  static const double binom[5][5] = {{1, 0, 0, 0, 0},
                                     {1, 1, 0, 0, 0},
                                     {1, 2, 1, 0, 0},
                                     {1, 3, 3, 1, 0},
                                     {1, 4, 6, 4, 1}};
  for (int k = 0; k <= 4; ++k) {
    double v = 0.0;
    for (int j = 0; j <= k; ++j) v += binom[k][j] * plain[j];
    shifted[k] = v;
  }

  CompensatedSum lhs, rhs;
  std::vector<std::size_t> visited;
  std::vector<char> is_visited(model.site_count(), 0);
  for (std::size_t mask = 0; mask < model.path_count(); ++mask) {
    model.visited_sites(mask, visited);
    for (std::size_t s : visited) is_visited[s] = 1;
    for (const LatticePoly::Term& t : terms) {
      double l = t.coeff, r = t.coeff;
      for (const auto& [site, pw] : t.factors) {
        if (is_visited[site]) {
          l *= tilted[pw];
          r *= shifted[pw];
        } else {
          l *= plain[pw];
          r *= plain[pw];
        }
      }
      lhs.add(l);
      rhs.add(r);
    }
    for (std::size_t s : visited) is_visited[s] = 0;
  }
  const double paths = static_cast<double>(model.path_count());
  return {lhs.value() / paths, rhs.value() / paths};
}

// Lattice walk as a shift sampler: each draw is the 0/1 occupation vector of
// a fresh n-step path, so the generic partition machinery applies verbatim.
class LatticeOccupationShift final : public ShiftSampler {
 public:
  explicit LatticeOccupationShift(int n_steps) : model_(n_steps) {}

  std::size_t dim() const override { return model_.site_count(); }
  std::string kind() const override { return "lattice-occupation"; }
  const LatticeModel& model() const { return model_; }

  void draw(std::uint64_t seed, std::span<double> m) const override {
    RngStream rng(seed);
    std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(dim()), 0.0);
    int pos = 0;
    for (int i = 1; i <= model_.n_steps(); ++i) {
      pos += rng.uniform() < 0.5 ? 1 : -1;
      m[model_.site_index(i, pos)] = 1.0;
    }
  }

 private:
  LatticeModel model_;
};

}  // namespace wickflow
