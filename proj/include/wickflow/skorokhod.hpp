#pragma once

// Finite-dimensional Skorokhod integral S(G) = sum_j G_j(xi) xi_j - d_j G_j(xi)
// plus the closed-form recursion machinery (probabilists' Hermite polynomials,
// iterated integrals of 1, the beta-recursion) used as exact oracles, and the
// Monte Carlo verifiers of the adjoint and projection identities.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wickflow/mc.hpp"
#include "wickflow/parallel.hpp"
#include "wickflow/rng.hpp"

namespace wickflow {

enum class DerivativeStrategy { analytic, central_difference };

// G: R^n -> R^n. diag_jacobian fills out[j] = d G_j / d xi_j and is required
// by the analytic strategy only; central differences use a step scaled by the
// coordinate magnitude so the O(h^2) truncation term stays controlled when
// third derivatives grow like |xi|^3.
struct Integrand {
  std::size_t n = 0;
  std::function<void(std::span<const double>, std::span<double>)> eval;
  std::function<void(std::span<const double>, std::span<double>)> diag_jacobian;
  DerivativeStrategy strategy = DerivativeStrategy::analytic;
  double h = 1e-5;
};

namespace detail {
inline void integrand_diag(const Integrand& G, std::span<const double> xi,
                           std::span<double> out, std::vector<double>& scratch) {
  const std::size_t n = G.n;
  if (G.strategy == DerivativeStrategy::analytic) {
    if (!G.diag_jacobian)
      throw std::invalid_argument("skorokhod: analytic strategy without diag_jacobian");
    G.diag_jacobian(xi, out);
    return;
  }
  if (!(G.h > 0.0)) throw std::invalid_argument("skorokhod: central-difference step must be > 0");
  scratch.assign(xi.begin(), xi.end());
  std::vector<double> gp(n), gm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double hj = G.h * std::max(1.0, std::abs(xi[j]));
    const double old = scratch[j];
    scratch[j] = old + hj;
    G.eval(scratch, gp);
    scratch[j] = old - hj;
    G.eval(scratch, gm);
    scratch[j] = old;
    out[j] = (gp[j] - gm[j]) / (2.0 * hj);
  }
}
}  // namespace detail

inline double skorokhod_finite(const Integrand& G, std::span<const double> xi) {
  if (xi.size() != G.n) throw std::invalid_argument("skorokhod_finite: dimension mismatch");
  if (!G.eval) throw std::invalid_argument("skorokhod_finite: missing eval");
  const std::size_t n = G.n;
  std::vector<double> g(n), dg(n), scratch;
  G.eval(xi, g);
  detail::integrand_diag(G, xi, dg, scratch);
  CompensatedSum s;
  for (std::size_t j = 0; j < n; ++j) s.add(g[j] * xi[j] - dg[j]);
  return s.value();
}

// Probabilists' Hermite polynomials: H_{k+1}(x) = x H_k(x) - k H_{k-1}(x).
inline double hermite(std::size_t k, double x) {
  double hkm1 = 0.0, hk = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    double next = x * hk - static_cast<double>(i) * hkm1;
    hkm1 = hk;
    hk = next;
  }
  return hk;
}

namespace detail {

// Dense univariate polynomial, coefficient c[i] on x^i. The one-dimensional
// Skorokhod integral maps p(x) to x p(x) - p'(x) exactly on coefficients.
using Poly = std::vector<double>;

inline Poly poly_skorokhod(const Poly& p) {
  Poly out(p.size() + 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) out[i + 1] += p[i];
  for (std::size_t i = 1; i < p.size(); ++i) out[i - 1] -= static_cast<double>(i) * p[i];
  return out;
}

inline double poly_eval(const Poly& p, double x) {
  double v = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

}  // namespace detail

// k-fold Skorokhod integral of the constant 1 in one dimension, carried on
// exact polynomial coefficients; equals hermite(k, xi).
inline double iterate_integral(std::size_t k, double xi) {
  detail::Poly p{1.0};
  for (std::size_t i = 0; i < k; ++i) p = detail::poly_skorokhod(p);
  return detail::poly_eval(p, xi);
}

// X_k = X_{k-1} + beta * S(X_{k-1}), X_0 = 1; solves to beta^k H_k(1/beta + xi).
inline double wick_recursion(double beta, std::size_t k, double xi) {
  if (beta == 0.0) throw std::invalid_argument("wick_recursion: beta must be nonzero");
  detail::Poly p{1.0};
  for (std::size_t i = 0; i < k; ++i) {
    detail::Poly s = detail::poly_skorokhod(p);
    p.resize(s.size(), 0.0);
    for (std::size_t c = 0; c < s.size(); ++c) p[c] += beta * s[c];
  }
  return detail::poly_eval(p, xi);
}

struct TestFunctional {
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

// MC estimate of E[S(G) F] - E[G . grad F] with common random numbers: both
// sides are evaluated on the same Gaussian draws, so the residual variance
// reflects only the identity defect, not two independent MC noises.
inline MCEstimate adjoint_residual(const Integrand& G, const TestFunctional& F,
                                   std::size_t reps, std::uint64_t seed, int workers = 1) {
  if (!F.value || !F.gradient) throw std::invalid_argument("adjoint_residual: incomplete F");
  const std::size_t n = G.n;
  std::vector<double> diffs = replica_map<double>(reps, workers, [&](std::size_t i) {
    RngStream rng(derive_seed(seed, i));
    std::vector<double> xi(n), g(n), dg(n), grad(n), scratch;
    for (double& x : xi) x = rng.gaussian();
    G.eval(xi, g);
    detail::integrand_diag(G, xi, dg, scratch);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += g[j] * xi[j] - dg[j];
    F.gradient(xi, grad);
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += g[j] * grad[j];
    return s * F.value(xi) - dot;
  });
  return estimate_from_samples(diffs, n, seed, "adjoint_residual");
}

// Residual of the projection identity E[S(G)|F_k] = S_k(E[P_k G|F_k]).
// Retained coordinates are drawn per replica; the conditional expectations on
// both sides share one sub-Monte-Carlo pool over the discarded coordinates,
// which telescopes the common part exactly and leaves the tail
// sum_{j>k} (G_j xi_j - d_j G_j), centered by the tower property.
inline MCEstimate projection_residual(const Integrand& G, std::size_t n_keep, std::size_t reps,
                                      std::uint64_t seed, std::size_t sub_reps = 64,
                                      int workers = 1) {
  if (n_keep > G.n) throw std::invalid_argument("projection_residual: n_keep > n");
  const std::size_t n = G.n;
  std::vector<double> diffs = replica_map<double>(reps, workers, [&](std::size_t i) {
    RngStream rng(derive_seed(seed, i));
    std::vector<double> xi(n), g(n), dg(n), scratch;
    for (std::size_t j = 0; j < n_keep; ++j) xi[j] = rng.gaussian();
    CompensatedSum lhs, rhs;
    for (std::size_t s = 0; s < sub_reps; ++s) {
      for (std::size_t j = n_keep; j < n; ++j) xi[j] = rng.gaussian();
      G.eval(xi, g);
      detail::integrand_diag(G, xi, dg, scratch);
      double full = 0.0, kept = 0.0;
      for (std::size_t j = 0; j < n; ++j) full += g[j] * xi[j] - dg[j];
      for (std::size_t j = 0; j < n_keep; ++j) kept += g[j] * xi[j] - dg[j];
      lhs.add(full);
      rhs.add(kept);
    }
    return (lhs.value() - rhs.value()) / static_cast<double>(sub_reps);
  });
  return estimate_from_samples(diffs, n, seed, "projection_residual");
}

}  // namespace wickflow
