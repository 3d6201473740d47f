#pragma once

// Orthonormal bases of the ambient spaces: Hermite functions on the line,
// their tensor products on the plane (anti-diagonal enumeration), the Fourier
// basis of the circle under the uniform probability measure, the N-rescaled
// plane family e_{N,j}(x,y) = (1/N) e_j(N^{-1/2}x, N^{-3/2}y), and a
// time-warped family on the strip R x [0,T] adapted to bridge occupation
// measures.
//
// Hermite functions are evaluated as psi_k(x) = p_k(x) * g(x) where g is the
// shared Gaussian factor pi^{-1/4} e^{-x^2/2} and p_k satisfies
//   p_0 = 1,  p_k(x) = x sqrt(2/k) p_{k-1}(x) - sqrt((k-1)/k) p_{k-2}(x).
// Splitting off g lets path integrals pay one exp per point; Cramer's bound
// |psi_k| <= pi^{-1/4} caps every element.
//
// The strip family is
//   e_{(a,b)}(x, tau) = psi_a(x_c / s(tau)) / sqrt(s(tau)) * phi_b(tau),
//   x_c = x - shear * (tau - T/2),
// with s(tau) = cx * sqrt(tau (T - tau)/T + eps T) and phi_b the orthonormal
// Legendre polynomials on [0, T]. For every positive scale profile and any
// shear the family is exactly orthonormal: the x-integral of
// e_{(a,b)} e_{(a',b')} collapses to delta_{aa'} phi_b phi_{b'} under
// u = x_c/s(tau), fiber by fiber (the shear is a unit-Jacobian change of
// variables per fiber). The scale tracks the standard deviation of a bridge
// pinned at 0 and T, so low spatial degrees already carry most of a bridge
// occupation measure near the pins; eps keeps s bounded away from 0 at the
// endpoints; the shear recenters the family on the mean line of a bridge with
// unequal spatial endpoints. Elements are enumerated along level sets of
// kappa*a + b because a unit of spatial degree buys roughly kappa times as
// much occupation mass as a unit of time degree.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wickflow/mathutil.hpp"
#include "wickflow/quadrature.hpp"

namespace wickflow {

enum class BasisKind {
  hermite_line,
  hermite_plane_tensor,
  fourier_circle,
  scaled_plane,
  bridge_strip
};

// Plane enumeration: anti-diagonals a+b = 0,1,2,... of N^2. "diagonal" walks
// each anti-diagonal by increasing second component (the inverse Cantor
// pairing); "diagonal_reversed" walks it the other way. Both cover the same
// span whenever n is a triangular number, which the basis-robustness checks
// exploit.
enum class PlaneOrdering { diagonal, diagonal_reversed };

struct BasisSpec {
  BasisKind kind = BasisKind::hermite_line;
  double scale_N = 1.0;  // scaled_plane only
  PlaneOrdering ordering = PlaneOrdering::diagonal;
  // bridge_strip only
  double strip_T = 1.0;
  double strip_cx = 0.5;
  double strip_eps = 2.5e-4;
  double strip_kappa = 4.0;
  double strip_shear = 0.0;

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

inline BasisSpec scaled_basis(const BasisSpec& plane, double N) {
  if (plane.kind != BasisKind::hermite_plane_tensor)
    throw std::invalid_argument("scaled_basis: base spec must be hermite-plane-tensor");
  if (!(N > 0.0)) throw std::invalid_argument("scaled_basis: N must be positive");
  return BasisSpec{BasisKind::scaled_plane, N, plane.ordering};
}

inline BasisSpec bridge_strip_basis(double T, double cx = 0.5, double eps = 2.5e-4,
                                    double kappa = 4.0, double shear = 0.0) {
  if (!(T > 0.0)) throw std::invalid_argument("bridge_strip_basis: horizon must be positive");
  if (!(cx > 0.0) || !(eps > 0.0) || !(kappa > 0.0))
    throw std::invalid_argument("bridge_strip_basis: cx, eps, kappa must be positive");
  BasisSpec spec;
  spec.kind = BasisKind::bridge_strip;
  spec.strip_T = T;
  spec.strip_cx = cx;
  spec.strip_eps = eps;
  spec.strip_kappa = kappa;
  spec.strip_shear = shear;
  return spec;
}

// Centered spatial offset of the strip family at height tau.
inline double strip_offset(const BasisSpec& spec, double tau) {
  return spec.strip_shear * (tau - 0.5 * spec.strip_T);
}

inline double strip_scale(const BasisSpec& spec, double tau) {
  const double T = spec.strip_T;
  return spec.strip_cx * std::sqrt(tau * (T - tau) / T + spec.strip_eps * T);
}

inline int basis_dimension(const BasisSpec& spec) {
  switch (spec.kind) {
    case BasisKind::hermite_line:
    case BasisKind::fourier_circle:
      return 1;
    case BasisKind::hermite_plane_tensor:
    case BasisKind::scaled_plane:
    case BasisKind::bridge_strip:
      return 2;
  }
  throw std::invalid_argument("basis_dimension: unknown kind");
}

struct PlanePair {
  int a, b;
};

// 1-based index j -> (a,b). Diagonal d = a+b, offset r = position within it.
inline PlanePair plane_pair(std::size_t j, PlaneOrdering ord) {
  if (j < 1) throw std::invalid_argument("plane_pair: index must be >= 1");
  std::size_t i = j - 1;
  std::size_t d = static_cast<std::size_t>((std::sqrt(8.0 * static_cast<double>(i) + 1.0) - 1.0) / 2.0);
  while (d * (d + 1) / 2 > i) --d;  // guard float rounding at diagonal edges
  while ((d + 1) * (d + 2) / 2 <= i) ++d;
  std::size_t r = i - d * (d + 1) / 2;
  int b = static_cast<int>(ord == PlaneOrdering::diagonal ? r : d - r);
  return {static_cast<int>(d) - b, b};
}

inline std::vector<PlanePair> plane_pairs(std::size_t n, PlaneOrdering ord) {
  std::vector<PlanePair> out;
  out.reserve(n);
  for (std::size_t j = 1; j <= n; ++j) out.push_back(plane_pair(j, ord));
  return out;
}

inline int plane_max_degree(std::size_t n, PlaneOrdering ord) {
  int d = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    PlanePair p = plane_pair(j, ord);
    d = std::max({d, p.a, p.b});
  }
  return d;
}

// Strip enumeration: the first n lattice points (a, b) ordered by the level
// kappa*a + b, ties broken by a then b. Deterministic for any kappa > 0.
inline std::vector<PlanePair> strip_pairs(std::size_t n, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("strip_pairs: kappa must be positive");
  // Grow the level cap until it encloses at least n points; the count below
  // level W is roughly W^2 / (2 kappa).
  double W = std::sqrt(2.0 * kappa * static_cast<double>(n)) + kappa + 1.0;
  struct Keyed {
    double w;
    int a, b;
  };
  std::vector<Keyed> cand;
  for (;;) {
    cand.clear();
    int amax = static_cast<int>(W / kappa) + 1;
    for (int a = 0; a <= amax; ++a) {
      double base = kappa * a;
      if (base > W) break;
      int bmax = static_cast<int>(W - base);
      for (int b = 0; b <= bmax; ++b) cand.push_back({base + b, a, b});
    }
    if (cand.size() >= n) break;
    W *= 1.5;
  }
  std::sort(cand.begin(), cand.end(), [](const Keyed& l, const Keyed& r) {
    if (l.w != r.w) return l.w < r.w;
    if (l.a != r.a) return l.a < r.a;
    return l.b < r.b;
  });
  std::vector<PlanePair> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.push_back({cand[j].a, cand[j].b});
  return out;
}

// Fills out[0..bmax] with phi_b(tau), the Legendre polynomials shifted to
// [0, T] and normalized to unit L^2 norm there.
inline void legendre_time_block(double tau, double T, int bmax, double* out) {
  const double u = 2.0 * tau / T - 1.0;
  double p_prev = 1.0;
  out[0] = std::sqrt(1.0 / T);
  if (bmax >= 1) out[1] = u * std::sqrt(3.0 / T);
  double p = u;
  for (int b = 2; b <= bmax; ++b) {
    double p_new = ((2.0 * b - 1.0) * u * p - (b - 1.0) * p_prev) / b;
    p_prev = p;
    p = p_new;
    out[b] = p * std::sqrt((2.0 * b + 1.0) / T);
  }
}

inline const double kHermiteGaussNorm = std::pow(kPi, -0.25);

inline double hermite_gauss_factor(double x) {
  return kHermiteGaussNorm * std::exp(-0.5 * x * x);
}

// Fills out[0..kmax] with p_k(x); psi_k(x) = out[k] * hermite_gauss_factor(x).
inline void hermite_poly_block(double x, int kmax, double* out) {
  out[0] = 1.0;
  if (kmax >= 1) out[1] = x * std::sqrt(2.0);
  for (int k = 2; k <= kmax; ++k)
    out[k] = x * std::sqrt(2.0 / k) * out[k - 1] - std::sqrt((k - 1.0) / k) * out[k - 2];
}

inline void hermite_function_block(double x, int kmax, double* out) {
  hermite_poly_block(x, kmax, out);
  double g = hermite_gauss_factor(x);
  for (int k = 0; k <= kmax; ++k) out[k] *= g;
}

inline double hermite_function(int k, double x) {
  std::vector<double> buf(static_cast<std::size_t>(k) + 1);
  hermite_function_block(x, k, buf.data());
  return buf[static_cast<std::size_t>(k)];
}

namespace detail {
inline double reduce_angle(double omega) {
  double w = std::fmod(omega, kTwoPi);
  return w < 0.0 ? w + kTwoPi : w;
}
}  // namespace detail

// Circle elements, j = 0 allowed: e_0 = 1, e_{2k-1} = sqrt(2) cos(k w),
// e_{2k} = sqrt(2) sin(k w); orthonormal for the uniform probability measure.
inline double circle_element(std::size_t j, double omega) {
  if (j == 0) return 1.0;
  double w = detail::reduce_angle(omega);
  std::size_t k = (j + 1) / 2;
  double kw = static_cast<double>(k) * w;
  return std::sqrt(2.0) * ((j % 2 == 1) ? std::cos(kw) : std::sin(kw));
}

inline double eval_basis(const BasisSpec& spec, std::size_t j, std::span<const double> x) {
  switch (spec.kind) {
    case BasisKind::hermite_line: {
      if (j < 1) throw std::invalid_argument("eval_basis: hermite-line index starts at 1");
      if (x.size() != 1) throw std::invalid_argument("eval_basis: line point must be 1-d");
      return hermite_function(static_cast<int>(j - 1), x[0]);
    }
    case BasisKind::fourier_circle: {
      if (x.size() != 1) throw std::invalid_argument("eval_basis: circle point must be 1-d");
      return circle_element(j, x[0]);
    }
    case BasisKind::hermite_plane_tensor: {
      if (j < 1) throw std::invalid_argument("eval_basis: plane index starts at 1");
      if (x.size() != 2) throw std::invalid_argument("eval_basis: plane point must be 2-d");
      PlanePair p = plane_pair(j, spec.ordering);
      return hermite_function(p.a, x[0]) * hermite_function(p.b, x[1]);
    }
    case BasisKind::scaled_plane: {
      if (j < 1) throw std::invalid_argument("eval_basis: plane index starts at 1");
      if (x.size() != 2) throw std::invalid_argument("eval_basis: plane point must be 2-d");
      PlanePair p = plane_pair(j, spec.ordering);
      const double N = spec.scale_N;
      return hermite_function(p.a, x[0] / std::sqrt(N)) *
             hermite_function(p.b, x[1] / std::pow(N, 1.5)) / N;
    }
    case BasisKind::bridge_strip: {
      if (j < 1) throw std::invalid_argument("eval_basis: strip index starts at 1");
      if (x.size() != 2) throw std::invalid_argument("eval_basis: strip point must be (x, tau)");
      const double tau = x[1];
      // Elements live on the strip and extend by zero outside it.
      if (tau < 0.0 || tau > spec.strip_T) return 0.0;
      PlanePair p = strip_pairs(j, spec.strip_kappa)[j - 1];
      const double s = strip_scale(spec, tau);
      std::vector<double> phi(static_cast<std::size_t>(p.b) + 1);
      legendre_time_block(tau, spec.strip_T, p.b, phi.data());
      return hermite_function(p.a, (x[0] - strip_offset(spec, tau)) / s) / std::sqrt(s) *
             phi[static_cast<std::size_t>(p.b)];
    }
  }
  throw std::invalid_argument("eval_basis: unknown kind");
}

// Documented sup bound for |e_j|. n = 0 asks for a bound uniform over the
// whole family; for the strip family the Legendre factor grows like
// sqrt(2b+1), so a uniform bound does not exist and a prefix length n >= 1 is
// required. The other kinds ignore n.
inline double basis_sup_bound(const BasisSpec& spec, std::size_t n = 0) {
  switch (spec.kind) {
    case BasisKind::hermite_line:
      return kHermiteGaussNorm;
    case BasisKind::hermite_plane_tensor:
      return kHermiteGaussNorm * kHermiteGaussNorm;
    case BasisKind::fourier_circle:
      return std::sqrt(2.0);
    case BasisKind::scaled_plane:
      return kHermiteGaussNorm * kHermiteGaussNorm / spec.scale_N;
    case BasisKind::bridge_strip: {
      if (n < 1)
        throw std::invalid_argument("basis_sup_bound: strip bound needs a prefix length");
      int bmax = 0;
      for (const PlanePair& p : strip_pairs(n, spec.strip_kappa)) bmax = std::max(bmax, p.b);
      const double s_min = spec.strip_cx * std::sqrt(spec.strip_eps * spec.strip_T);
      return kHermiteGaussNorm / std::sqrt(s_min) *
             std::sqrt((2.0 * bmax + 1.0) / spec.strip_T);
    }
  }
  throw std::invalid_argument("basis_sup_bound: unknown kind");
}

// Max |<e_i,e_j> - delta_ij| over the first n elements. quad_points = 0 picks
// the kind default (64 Gauss-Hermite nodes per axis; 4096 circle trapezoid
// points). Insufficient node counts are an error, never a silent downgrade.
// For scaled_plane the Gram integral reduces to the unscaled one by the exact
// change of variables (x,y) -> (N^{1/2}x, N^{3/2}y), whose Jacobian N^2
// cancels the (1/N)^2 prefactor; the quadrature grid maps along, so the
// computation coincides with the hermite_plane_tensor case.
inline double gram_residual(const BasisSpec& spec, std::size_t n, std::size_t quad_points = 0) {
  if (n < 1) throw std::invalid_argument("gram_residual: need n >= 1");
  switch (spec.kind) {
    case BasisKind::hermite_line: {
      std::size_t nodes = quad_points ? quad_points : 64;
      int max_deg = static_cast<int>(n) - 1;
      if (nodes < static_cast<std::size_t>(max_deg) + 1)
        throw std::invalid_argument("gram_residual: need >= n Gauss-Hermite nodes");
      GaussHermiteRule rule = gauss_hermite(static_cast<int>(nodes));
      // B[k][p] = psi_k(x_p) sqrt(total_weight_p); Gram = B B^T.
      std::vector<double> B(n * nodes);
      std::vector<double> psi(static_cast<std::size_t>(max_deg) + 1);
      for (std::size_t p = 0; p < nodes; ++p) {
        hermite_function_block(rule.node[p], max_deg, psi.data());
        double sw = std::sqrt(rule.total_weight[p]);
        for (std::size_t k = 0; k < n; ++k) B[k * nodes + p] = psi[k] * sw;
      }
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          CompensatedSum s;
          for (std::size_t p = 0; p < nodes; ++p) s.add(B[i * nodes + p] * B[j * nodes + p]);
          worst = std::max(worst, std::abs(s.value() - (i == j ? 1.0 : 0.0)));
        }
      return worst;
    }
    case BasisKind::hermite_plane_tensor:
    case BasisKind::scaled_plane: {
      std::size_t nodes = quad_points ? quad_points : 64;
      std::vector<PlanePair> pairs = plane_pairs(n, spec.ordering);
      int max_deg = 0;
      for (const PlanePair& p : pairs) max_deg = std::max({max_deg, p.a, p.b});
      if (nodes < static_cast<std::size_t>(max_deg) + 1)
        throw std::invalid_argument("gram_residual: Gauss-Hermite nodes below max degree + 1");
      GaussHermiteRule rule = gauss_hermite(static_cast<int>(nodes));
      std::vector<double> psi((static_cast<std::size_t>(max_deg) + 1) * nodes);
      for (std::size_t p = 0; p < nodes; ++p) {
        std::vector<double> col(static_cast<std::size_t>(max_deg) + 1);
        hermite_function_block(rule.node[p], max_deg, col.data());
        for (int k = 0; k <= max_deg; ++k)
          psi[static_cast<std::size_t>(k) * nodes + p] = col[static_cast<std::size_t>(k)];
      }
      // B[j][(p,q)] = psi_a(x_p) psi_b(x_q) sqrt(lam_p lam_q)
      std::size_t cols = nodes * nodes;
      std::vector<double> B(n * cols);
      std::vector<double> sqw(nodes);
      for (std::size_t p = 0; p < nodes; ++p) sqw[p] = std::sqrt(rule.total_weight[p]);
      for (std::size_t j = 0; j < n; ++j) {
        const double* pa = &psi[static_cast<std::size_t>(pairs[j].a) * nodes];
        const double* pb = &psi[static_cast<std::size_t>(pairs[j].b) * nodes];
        for (std::size_t p = 0; p < nodes; ++p) {
          double fa = pa[p] * sqw[p];
          for (std::size_t q = 0; q < nodes; ++q)
            B[j * cols + p * nodes + q] = fa * pb[q] * sqw[q];
        }
      }
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          CompensatedSum s;
          for (std::size_t c = 0; c < cols; ++c) s.add(B[i * cols + c] * B[j * cols + c]);
          worst = std::max(worst, std::abs(s.value() - (i == j ? 1.0 : 0.0)));
        }
      return worst;
    }
    case BasisKind::bridge_strip: {
      // Per time fiber the substitution x = s(tau) u removes the scale from
      // the integrand, leaving psi_a psi_a' (u) phi_b phi_b' (tau). The
      // product rule Gauss-Hermite(u) x Gauss-Legendre(tau) is then exact
      // once each axis has one node more than its max degree.
      std::vector<PlanePair> pairs = strip_pairs(n, spec.strip_kappa);
      int amax = 0, bmax = 0;
      for (const PlanePair& p : pairs) {
        amax = std::max(amax, p.a);
        bmax = std::max(bmax, p.b);
      }
      std::size_t nodes = quad_points ? quad_points : std::max<std::size_t>(
          64, static_cast<std::size_t>(std::max(amax, bmax)) + 1);
      if (nodes < static_cast<std::size_t>(std::max(amax, bmax)) + 1)
        throw std::invalid_argument("gram_residual: strip nodes below max degree + 1");
      GaussHermiteRule hrule = gauss_hermite(static_cast<int>(nodes));
      GaussLegendreRule lrule = gauss_legendre(static_cast<int>(nodes));
      const double T = spec.strip_T;
      std::vector<double> psi((static_cast<std::size_t>(amax) + 1) * nodes);
      for (std::size_t q = 0; q < nodes; ++q) {
        std::vector<double> col(static_cast<std::size_t>(amax) + 1);
        hermite_function_block(hrule.node[q], amax, col.data());
        double sw = std::sqrt(hrule.total_weight[q]);
        for (int a = 0; a <= amax; ++a)
          psi[static_cast<std::size_t>(a) * nodes + q] = col[static_cast<std::size_t>(a)] * sw;
      }
      std::vector<double> phi((static_cast<std::size_t>(bmax) + 1) * nodes);
      for (std::size_t p = 0; p < nodes; ++p) {
        double tau = 0.5 * T * (lrule.node[p] + 1.0);
        std::vector<double> col(static_cast<std::size_t>(bmax) + 1);
        legendre_time_block(tau, T, bmax, col.data());
        double sw = std::sqrt(0.5 * T * lrule.weight[p]);
        for (int b = 0; b <= bmax; ++b)
          phi[static_cast<std::size_t>(b) * nodes + p] = col[static_cast<std::size_t>(b)] * sw;
      }
      std::size_t cols = nodes * nodes;
      std::vector<double> B(n * cols);
      for (std::size_t j = 0; j < n; ++j) {
        const double* pa = &psi[static_cast<std::size_t>(pairs[j].a) * nodes];
        const double* pb = &phi[static_cast<std::size_t>(pairs[j].b) * nodes];
        for (std::size_t p = 0; p < nodes; ++p)
          for (std::size_t q = 0; q < nodes; ++q) B[j * cols + p * nodes + q] = pb[p] * pa[q];
      }
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          CompensatedSum s;
          for (std::size_t c = 0; c < cols; ++c) s.add(B[i * cols + c] * B[j * cols + c]);
          worst = std::max(worst, std::abs(s.value() - (i == j ? 1.0 : 0.0)));
        }
      return worst;
    }
    case BasisKind::fourier_circle: {
      // First n elements are e_0 .. e_{n-1}; the constant is part of the family.
      std::size_t points = quad_points ? quad_points : 4096;
      std::size_t kmax = n / 2;  // highest harmonic among e_0..e_{n-1}
      if (points <= 2 * kmax)
        throw std::invalid_argument("gram_residual: circle trapezoid below Nyquist for n");
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          CompensatedSum s;
          for (std::size_t p = 0; p < points; ++p) {
            double w = kTwoPi * static_cast<double>(p) / static_cast<double>(points);
            s.add(circle_element(i, w) * circle_element(j, w));
          }
          double val = s.value() / static_cast<double>(points);
          worst = std::max(worst, std::abs(val - (i == j ? 1.0 : 0.0)));
        }
      return worst;
    }
  }
  throw std::invalid_argument("gram_residual: unknown kind");
}

inline BasisKind basis_kind_from_name(const std::string& name) {
  if (name == "hermite-line") return BasisKind::hermite_line;
  if (name == "hermite-plane-tensor") return BasisKind::hermite_plane_tensor;
  if (name == "fourier-circle") return BasisKind::fourier_circle;
  if (name == "scaled-plane") return BasisKind::scaled_plane;
  if (name == "bridge-strip") return BasisKind::bridge_strip;
  throw std::invalid_argument("unknown basis kind: " + name);
}

inline std::string basis_kind_name(BasisKind kind) {
  switch (kind) {
    case BasisKind::hermite_line: return "hermite-line";
    case BasisKind::hermite_plane_tensor: return "hermite-plane-tensor";
    case BasisKind::fourier_circle: return "fourier-circle";
    case BasisKind::scaled_plane: return "scaled-plane";
    case BasisKind::bridge_strip: return "bridge-strip";
  }
  return "?";
}

}  // namespace wickflow
