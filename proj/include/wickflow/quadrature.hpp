#pragma once

// Gauss-Hermite rules (weight e^{-x^2}): eigenvalues of the Jacobi matrix
// are the nodes, weights come from the Christoffel identity
//   w_i e^{x_i^2} = 1 / sum_{k<n} psi_k(x_i)^2
// over the orthonormal Hermite functions psi_k. The eigenvector route
// (mu0 v0^2) bottoms out at the eigensolver noise floor ~1e-32 while the
// edge weights are far smaller, so multiplying by e^{x^2} there amplifies
// pure noise; the Christoffel sum only ever handles O(1) psi values.
// total_weight[i] = w_i e^{x_i^2} serves integrands that carry their own
// Gaussian decay. psi_0 = pi^{-1/4} e^{-x^2/2} stays representable for
// every node up to ~256-point rules.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wickflow/mathutil.hpp"

namespace wickflow {

struct GaussHermiteRule {
  std::vector<double> node;
  std::vector<double> weight;        // for integrals against e^{-x^2} dx
  std::vector<double> total_weight;  // weight[i] * e^{node[i]^2}
};

inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite: eigensolve failed");
  GaussHermiteRule rule;
  rule.node.resize(n);
  rule.weight.resize(n);
  rule.total_weight.resize(n);
  std::vector<double> psi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = es.eigenvalues()(i);
    psi[0] = std::exp(-0.5 * x * x) / std::pow(kPi, 0.25);
    if (n > 1) psi[1] = std::sqrt(2.0) * x * psi[0];
    for (int k = 2; k < n; ++k)
      psi[static_cast<std::size_t>(k)] =
          std::sqrt(2.0 / k) * x * psi[static_cast<std::size_t>(k - 1)] -
          std::sqrt((k - 1.0) / k) * psi[static_cast<std::size_t>(k - 2)];
    CompensatedSum s;
    for (int k = 0; k < n; ++k)
      s.add(psi[static_cast<std::size_t>(k)] * psi[static_cast<std::size_t>(k)]);
    rule.node[i] = x;
    rule.total_weight[i] = 1.0 / s.value();
    rule.weight[i] = rule.total_weight[i] * std::exp(-x * x);
  }
  return rule;
}

// E[f(xi)] for xi ~ N(0,1) via the substitution x = sqrt(2) u.
template <typename F>
double gauss_hermite_normal_expectation(const GaussHermiteRule& rule, F&& f) {
  CompensatedSum s;
  const double root2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < rule.node.size(); ++i)
    s.add(rule.weight[i] * f(root2 * rule.node[i]));
  return s.value() / std::sqrt(kPi);
}

// Gauss-Legendre on [-1, 1], same Golub-Welsch route. Off-diagonal entries
// are beta_k = k / sqrt(4k^2 - 1), first moment mu0 = 2. Exact through
// polynomial degree 2n - 1.
struct GaussLegendreRule {
  std::vector<double> node;
  std::vector<double> weight;
};

inline GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_legendre: eigensolve failed");
  GaussLegendreRule rule;
  rule.node.resize(n);
  rule.weight.resize(n);
  for (int i = 0; i < n; ++i) {
    double v0 = es.eigenvectors()(0, i);
    rule.node[i] = es.eigenvalues()(i);
    rule.weight[i] = 2.0 * v0 * v0;
  }
  return rule;
}

}  // namespace wickflow
