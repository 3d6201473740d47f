#pragma once

// Named experiments behind the CLI subcommands. Each takes a parsed config,
// runs the module operations with config-driven parameters, and returns CSV
// rows plus pass/fail check lines for the contracts the run exercises.
// Defaults are sized for interactive runs; the acceptance suite pins its own
// replica counts separately.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wickflow/basis.hpp"
#include "wickflow/config.hpp"
#include "wickflow/csv.hpp"
#include "wickflow/mathutil.hpp"
#include "wickflow/milt.hpp"
#include "wickflow/parallel.hpp"
#include "wickflow/paths.hpp"
#include "wickflow/polymers.hpp"
#include "wickflow/rng.hpp"
#include "wickflow/she.hpp"
#include "wickflow/shifts.hpp"
#include "wickflow/skorokhod.hpp"

namespace wickflow {

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<std::string> checks;
  bool passed = true;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

inline void add_check(ExperimentResult& r, bool ok, const std::string& what) {
  r.checks.push_back(std::string(ok ? "PASS: " : "FAIL: ") + what);
  if (!ok) r.passed = false;
}

inline void add_row(ExperimentResult& r, const std::string& experiment, const MCEstimate& est,
                    std::optional<double> oracle, double wall_ms) {
  ResultRow row = row_from_estimate(experiment, est, oracle);
  row.wall_time_ms = wall_ms;
  r.rows.push_back(std::move(row));
}

// Row for an exact (non-MC) quantity: stderr 0, z left empty.
inline void add_exact_row(ExperimentResult& r, const std::string& experiment,
                          const std::string& label, std::size_t n, double value,
                          std::optional<double> oracle, double wall_ms,
                          std::uint64_t seed) {
  ResultRow row;
  row.experiment = experiment;
  row.label = label;
  row.n = n;
  row.reps = 1;
  row.mean = value;
  row.std_err = 0.0;
  row.oracle = oracle;
  row.wall_time_ms = wall_ms;
  row.seed = seed;
  r.rows.push_back(std::move(row));
}

inline std::vector<double> gaussian_vector(std::uint64_t seed, std::size_t n) {
  RngStream rng(seed);
  std::vector<double> xi(n);
  for (double& v : xi) v = rng.gaussian();
  return xi;
}

// Standard path laws used across experiments. The planar shifts pair a 2-d
// bridge or motion with purely spatial plane elements; the 1+1 shift pairs a
// 1-d bridge with the spacetime strip family over the same horizon.
inline PathShiftConfig planar_bridge_law(double t, std::size_t steps = 0) {
  PathShiftConfig cfg;
  cfg.law = LawKind::bridge;
  cfg.dim = 2;
  cfg.start = {0.0, 0.0};
  cfg.end = {0.0, 0.0};
  cfg.cov = {1.0, 1.0};
  cfg.horizon = t;
  cfg.spacetime = false;
  cfg.steps = steps;
  return cfg;
}

inline PathShiftConfig planar_motion_law(double t, std::size_t steps = 0) {
  PathShiftConfig cfg;
  cfg.law = LawKind::motion;
  cfg.dim = 2;
  cfg.start = {0.0, 0.0};
  cfg.drift = {0.0, 0.0};
  cfg.cov = {1.0, 1.0};
  cfg.horizon = t;
  cfg.spacetime = false;
  cfg.steps = steps;
  return cfg;
}

inline PathShiftConfig bridge_1p1_law(double t, std::size_t steps = 0,
                                      GridKind grid = GridKind::graded) {
  PathShiftConfig cfg;
  cfg.law = LawKind::bridge;
  cfg.dim = 1;
  cfg.start = {0.0};
  cfg.end = {0.0};
  cfg.cov = {1.0};
  cfg.horizon = t;
  cfg.spacetime = true;
  cfg.steps = steps;
  cfg.grid = grid;
  return cfg;
}

// ---------------------------------------------------------------------------
// gram: orthonormality residuals for every basis family.

inline ExperimentResult run_gram(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const auto n = pr.get<std::size_t>("n", 32);
  const auto quad = pr.get<std::size_t>("quad_points", 0);
  const double tol = pr.get<double>("tol", 1e-10);
  pr.finish();
  ExperimentResult result;
  struct Case {
    const char* label;
    BasisSpec spec;
  };
  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  std::vector<Case> cases = {
      {"gram_hermite_line", BasisSpec{}},
      {"gram_hermite_plane", plane},
      {"gram_fourier_circle", BasisSpec{BasisKind::fourier_circle}},
      {"gram_scaled_plane", scaled_basis(plane, 4.0)},
      {"gram_bridge_strip", bridge_strip_basis(1.0)},
  };
  for (const Case& c : cases) {
    detail::Stopwatch sw;
    double res = gram_residual(c.spec, n, quad);
    add_exact_row(result, "gram", c.label, n, res, 0.0, sw.ms(), cfg.seed);
    add_check(result, res <= tol,
              std::string(c.label) + " residual " + detail::fmt(res) + " <= " + detail::fmt(tol));
  }
  return result;
}

// ---------------------------------------------------------------------------
// hermite-check: iterated integrals of 1 against Hermite polynomials, and the
// beta recursion against its closed form, on an exact coefficient route.

inline ExperimentResult run_hermite_check(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const auto kmax = pr.get<std::size_t>("kmax", 8);
  const double tol = pr.get<double>("tol", 1e-9);
  pr.finish();
  ExperimentResult result;
  detail::Stopwatch sw;
  double worst_it = 0.0;
  for (std::size_t k = 0; k <= kmax; ++k) {
    double worst_k = 0.0;
    for (int xi = -3; xi <= 3; ++xi)
      worst_k = std::max(worst_k, std::abs(iterate_integral(k, xi) - hermite(k, xi)));
    add_exact_row(result, "hermite-check", "iterate_k" + std::to_string(k), k, worst_k, 0.0,
                  sw.ms(), cfg.seed);
    worst_it = std::max(worst_it, worst_k);
  }
  add_check(result, worst_it <= tol,
            "iterated integrals match hermite, worst " + detail::fmt(worst_it));
  double worst_wick = 0.0;
  for (double beta : {0.5, 1.0, 2.0}) {
    double worst_b = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k)
      for (int xi = -3; xi <= 3; ++xi) {
        double ref = std::pow(beta, static_cast<double>(k)) * hermite(k, 1.0 / beta + xi);
        worst_b = std::max(worst_b, std::abs(wick_recursion(beta, k, xi) - ref));
      }
    add_exact_row(result, "hermite-check", "wick_beta" + detail::fmt(beta), kmax, worst_b, 0.0,
                  sw.ms(), cfg.seed);
    worst_wick = std::max(worst_wick, worst_b);
  }
  add_check(result, worst_wick <= tol,
            "wick recursion matches beta^k H_k(1/beta + xi), worst " + detail::fmt(worst_wick));
  return result;
}

// ---------------------------------------------------------------------------
// adjoint-check: E[S(G) F] = E[G . grad F] over a battery of (G, F) pairs
// mixing analytic and central-difference diagonals, including the exponential
// martingale case where S(G) has a closed form.

namespace detail {

struct AdjointCase {
  std::string label;
  Integrand G;
  TestFunctional F;
};

inline std::vector<AdjointCase> adjoint_battery() {
  std::vector<AdjointCase> cases;
  auto scalar = [](double lambda) {
    Integrand g;
    g.n = 1;
    g.eval = [lambda](std::span<const double> xi, std::span<double> out) {
      out[0] = lambda * std::exp(lambda * xi[0] - 0.5 * lambda * lambda);
    };
    g.diag_jacobian = [lambda](std::span<const double> xi, std::span<double> out) {
      out[0] = lambda * lambda * std::exp(lambda * xi[0] - 0.5 * lambda * lambda);
    };
    return g;
  };
  TestFunctional f_id{[](std::span<const double> xi) { return xi[0]; },
                      [](std::span<const double>, std::span<double> g) { g[0] = 1.0; }};
  TestFunctional f_cos{[](std::span<const double> xi) { return std::cos(xi[0]); },
                       [](std::span<const double> xi, std::span<double> g) {
                         g[0] = -std::sin(xi[0]);
                       }};
  cases.push_back({"exp_martingale_l0.7", scalar(0.7), f_id});
  cases.push_back({"exp_martingale_lneg1.3", scalar(-1.3), f_cos});

  Integrand lin;
  lin.n = 1;
  lin.eval = [](std::span<const double> xi, std::span<double> o) { o[0] = xi[0]; };
  lin.diag_jacobian = [](std::span<const double>, std::span<double> o) { o[0] = 1.0; };
  cases.push_back({"linear_vs_square", lin,
                   TestFunctional{[](std::span<const double> xi) { return xi[0] * xi[0]; },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    g[0] = 2.0 * xi[0];
                                  }}});

  Integrand cube;
  cube.n = 1;
  cube.eval = [](std::span<const double> xi, std::span<double> o) {
    o[0] = xi[0] * xi[0] * xi[0];
  };
  cube.diag_jacobian = [](std::span<const double> xi, std::span<double> o) {
    o[0] = 3.0 * xi[0] * xi[0];
  };
  cases.push_back({"cubic_vs_cos", cube, f_cos});

  Integrand square1;
  square1.n = 1;
  square1.eval = [](std::span<const double> xi, std::span<double> o) { o[0] = xi[0] * xi[0]; };
  square1.diag_jacobian = [](std::span<const double> xi, std::span<double> o) {
    o[0] = 2.0 * xi[0];
  };
  cases.push_back({"square_vs_cube", square1,
                   TestFunctional{[](std::span<const double> xi) { return std::pow(xi[0], 3); },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    g[0] = 3.0 * xi[0] * xi[0];
                                  }}});

  Integrand cross;
  cross.n = 2;
  cross.eval = [](std::span<const double> xi, std::span<double> o) {
    o[0] = xi[0] * xi[1];
    o[1] = xi[0] * xi[1];
  };
  cross.diag_jacobian = [](std::span<const double> xi, std::span<double> o) {
    o[0] = xi[1];
    o[1] = xi[0];
  };
  cases.push_back({"bilinear_vs_exp", cross,
                   TestFunctional{[](std::span<const double> xi) {
                                    return std::exp(0.3 * xi[0] - 0.2 * xi[1]);
                                  },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    double e = std::exp(0.3 * xi[0] - 0.2 * xi[1]);
                                    g[0] = 0.3 * e;
                                    g[1] = -0.2 * e;
                                  }}});

  Integrand swapped;
  swapped.n = 2;
  swapped.eval = [](std::span<const double> xi, std::span<double> o) {
    o[0] = std::cos(xi[1]);
    o[1] = std::sin(xi[0]);
  };
  // Each component depends only on the other coordinate.
  swapped.diag_jacobian = [](std::span<const double>, std::span<double> o) {
    o[0] = 0.0;
    o[1] = 0.0;
  };
  cases.push_back({"swapped_trig", swapped,
                   TestFunctional{[](std::span<const double> xi) { return xi[0] * xi[1]; },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    g[0] = xi[1];
                                    g[1] = xi[0];
                                  }}});

  Integrand sines;
  sines.n = 3;
  sines.eval = [](std::span<const double> xi, std::span<double> o) {
    for (std::size_t j = 0; j < 3; ++j) o[j] = std::sin(xi[j]);
  };
  sines.strategy = DerivativeStrategy::central_difference;
  cases.push_back({"sines_central", sines,
                   TestFunctional{[](std::span<const double> xi) {
                                    return xi[0] * xi[1] * xi[2];
                                  },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    g[0] = xi[1] * xi[2];
                                    g[1] = xi[0] * xi[2];
                                    g[2] = xi[0] * xi[1];
                                  }}});

  Integrand gauss3;
  gauss3.n = 3;
  gauss3.eval = [](std::span<const double> xi, std::span<double> o) {
    for (std::size_t j = 0; j < 3; ++j) o[j] = std::exp(-0.5 * xi[j] * xi[j]);
  };
  gauss3.diag_jacobian = [](std::span<const double> xi, std::span<double> o) {
    for (std::size_t j = 0; j < 3; ++j) o[j] = -xi[j] * std::exp(-0.5 * xi[j] * xi[j]);
  };
  cases.push_back({"gaussians_vs_norm", gauss3,
                   TestFunctional{[](std::span<const double> xi) {
                                    double s = 0.0;
                                    for (double v : xi) s += v * v;
                                    return s;
                                  },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    for (std::size_t j = 0; j < 3; ++j) g[j] = 2.0 * xi[j];
                                  }}});

  Integrand herm;
  herm.n = 4;
  herm.eval = [](std::span<const double> xi, std::span<double> o) {
    for (std::size_t j = 0; j < 4; ++j) o[j] = hermite(3, xi[j]);
  };
  herm.diag_jacobian = [](std::span<const double> xi, std::span<double> o) {
    for (std::size_t j = 0; j < 4; ++j) o[j] = 3.0 * hermite(2, xi[j]);
  };
  cases.push_back({"hermite3_vs_h2h1", herm,
                   TestFunctional{[](std::span<const double> xi) {
                                    return hermite(2, xi[0]) * hermite(1, xi[1]);
                                  },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    g[0] = 2.0 * hermite(1, xi[0]) * hermite(1, xi[1]);
                                    g[1] = hermite(2, xi[0]);
                                    g[2] = 0.0;
                                    g[3] = 0.0;
                                  }}});

  Integrand cauchy;
  cauchy.n = 4;
  cauchy.eval = [](std::span<const double> xi, std::span<double> o) {
    for (std::size_t j = 0; j < 4; ++j) o[j] = 1.0 / (1.0 + xi[j] * xi[j]);
  };
  cauchy.strategy = DerivativeStrategy::central_difference;
  cases.push_back({"cauchy_central_vs_tanh", cauchy,
                   TestFunctional{[](std::span<const double> xi) {
                                    double s = 0.0;
                                    for (double v : xi) s += 0.25 * v;
                                    return std::tanh(s);
                                  },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    double s = 0.0;
                                    for (double v : xi) s += 0.25 * v;
                                    double d = 0.25 / (std::cosh(s) * std::cosh(s));
                                    for (std::size_t j = 0; j < 4; ++j) g[j] = d;
                                  }}});

  Integrand squares5;
  squares5.n = 5;
  squares5.eval = [](std::span<const double> xi, std::span<double> o) {
    for (std::size_t j = 0; j < 5; ++j) o[j] = xi[j] * xi[j];
  };
  squares5.strategy = DerivativeStrategy::central_difference;
  cases.push_back({"squares5_central_vs_exp", squares5,
                   TestFunctional{[](std::span<const double> xi) {
                                    double s = 0.0;
                                    for (double v : xi) s += 0.15 * v;
                                    return std::exp(s);
                                  },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    double s = 0.0;
                                    for (double v : xi) s += 0.15 * v;
                                    double e = std::exp(s);
                                    for (std::size_t j = 0; j < 5; ++j) g[j] = 0.15 * e;
                                  }}});

  Integrand expshift;
  expshift.n = 2;
  expshift.eval = [](std::span<const double> xi, std::span<double> o) {
    o[0] = std::exp(0.4 * xi[1]);
    o[1] = std::exp(-0.4 * xi[0]);
  };
  expshift.diag_jacobian = [](std::span<const double>, std::span<double> o) {
    o[0] = 0.0;
    o[1] = 0.0;
  };
  cases.push_back({"cross_exponentials", expshift,
                   TestFunctional{[](std::span<const double> xi) {
                                    return std::sin(xi[0] + xi[1]);
                                  },
                                  [](std::span<const double> xi, std::span<double> g) {
                                    double c = std::cos(xi[0] + xi[1]);
                                    g[0] = c;
                                    g[1] = c;
                                  }}});
  return cases;
}

}  // namespace detail

inline ExperimentResult run_adjoint_check(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("reps", 100000);
  const double z_max = pr.get<double>("z_max", 4.0);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;
  std::size_t idx = 0;
  for (detail::AdjointCase& c : detail::adjoint_battery()) {
    detail::Stopwatch sw;
    MCEstimate est = adjoint_residual(c.G, c.F, reps, derive_seed(cfg.seed, idx++), workers);
    est.label = "adjoint_" + c.label;
    add_row(result, "adjoint-check", est, 0.0, sw.ms());
    double z = est.std_err > 0.0 ? std::abs(est.mean) / est.std_err : 0.0;
    add_check(result, z <= z_max, "adjoint " + c.label + " |z| = " + detail::fmt(z));
  }
  return result;
}

// ---------------------------------------------------------------------------
// zn: partition mean-one residuals for the two standard occupation shifts,
// plus the nested-vs-paired second-moment cross-validation. The mean-one
// identity holds exactly for the quadrature coordinates at any step count, so
// the step counts here are free accuracy/runtime knobs, not bias knobs.

inline ExperimentResult run_zn(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t p_reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("p_reps", 2000);
  const auto q_reps = pr.get<std::size_t>("q_reps", 100);
  const auto n_planar = pr.get<std::size_t>("n_planar", 32);
  const auto n_1p1 = pr.get<std::size_t>("n_1p1", 64);
  const double t_planar = pr.get<double>("t_planar", 0.5);
  const double t_1p1 = pr.get<double>("t_1p1", 1.0);
  const auto steps_planar = pr.get<std::size_t>("steps_planar", 256);
  const auto steps_1p1 = pr.get<std::size_t>("steps_1p1", 512);
  const bool duality = pr.get<bool>("duality", false);
  const std::size_t dual_reps = pr.get<std::size_t>("duality_reps", 800);
  const std::size_t dual_pairs = pr.get<std::size_t>("duality_pairs", 20000);
  const double z_max = pr.get<double>("z_max", 4.0);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;

  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  {
    detail::Stopwatch sw;
    PathOccupationShift shift(planar_bridge_law(t_planar, steps_planar), plane, n_planar);
    MCEstimate est =
        mean_one_residual(shift, n_planar, p_reps, q_reps, derive_seed(cfg.seed, 1), workers);
    est.label = "mean_one_planar";
    add_row(result, "zn", est, 0.0, sw.ms());
    double z = est.std_err > 0.0 ? std::abs(est.mean) / est.std_err : 0.0;
    add_check(result, z <= z_max, "planar bridge mean-one |z| = " + detail::fmt(z));
  }
  {
    detail::Stopwatch sw;
    PathOccupationShift shift(bridge_1p1_law(t_1p1, steps_1p1), bridge_strip_basis(t_1p1),
                              n_1p1);
    MCEstimate est =
        mean_one_residual(shift, n_1p1, p_reps, q_reps, derive_seed(cfg.seed, 2), workers);
    est.label = "mean_one_1p1";
    add_row(result, "zn", est, 0.0, sw.ms());
    double z = est.std_err > 0.0 ? std::abs(est.mean) / est.std_err : 0.0;
    add_check(result, z <= z_max, "1+1 bridge mean-one |z| = " + detail::fmt(z));
  }
  if (duality) {
    for (std::size_t n : {std::size_t{64}, std::size_t{256}}) {
      detail::Stopwatch sw;
      PathOccupationShift shift(bridge_1p1_law(t_1p1, 0), bridge_strip_basis(t_1p1), n);
      auto [nested, paired] = second_moment(shift, n, dual_reps, derive_seed(cfg.seed, 3 + n),
                                            32, workers, dual_pairs);
      add_row(result, "zn", nested, std::nullopt, sw.ms());
      add_row(result, "zn", paired, std::nullopt, sw.ms());
      double gap = std::abs(nested.mean - paired.mean);
      double sigma = std::sqrt(nested.std_err * nested.std_err + paired.std_err * paired.std_err);
      add_check(result, gap <= z_max * sigma,
                "second-moment duality n=" + std::to_string(n) + " gap " + detail::fmt(gap) +
                    " <= " + detail::fmt(z_max) + " x " + detail::fmt(sigma));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// shift-identity: E_P E_{M_xi} F = E_{P x Q} F(xi + m, .) for a small battery
// of joint functionals on the 1+1 bridge shift.

inline ExperimentResult run_shift_identity(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t p_reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("p_reps", 4000);
  const auto q_reps = pr.get<std::size_t>("q_reps", 32);
  const auto n = pr.get<std::size_t>("n", 16);
  const double z_max = pr.get<double>("z_max", 4.0);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;
  PathOccupationShift shift(bridge_1p1_law(1.0, 256), bridge_strip_basis(1.0), n);

  struct Case {
    std::string label;
    std::function<double(std::span<const double>, const QDraw&)> F;
  };
  const std::size_t probe = n / 2;
  std::vector<Case> cases;
  cases.push_back({"const_one", [](std::span<const double>, const QDraw&) { return 1.0; }});
  cases.push_back({"coordinate",
                   [probe](std::span<const double> xi, const QDraw&) { return xi[probe]; }});
  cases.push_back({"cosine", [](std::span<const double> xi, const QDraw&) {
                     double s = 0.0;
                     for (double v : xi) s += 0.3 * v;
                     return std::cos(s);
                   }});
  // Joint in (xi, draw): couples the field to the drawn coordinates.
  cases.push_back({"joint_dot", [](std::span<const double> xi, const QDraw& d) {
                     double s = 0.0;
                     for (std::size_t j = 0; j < d.m.size(); ++j) s += xi[j] * d.m[j];
                     return std::tanh(s);
                   }});
  std::size_t idx = 0;
  for (const Case& c : cases) {
    detail::Stopwatch sw;
    MCEstimate est =
        shift_identity_residual(shift, c.F, p_reps, q_reps, derive_seed(cfg.seed, idx++), workers);
    est.label = "shift_identity_" + c.label;
    add_row(result, "shift-identity", est, 0.0, sw.ms());
    double z = est.std_err > 0.0 ? std::abs(est.mean) / est.std_err : 0.0;
    add_check(result, z <= z_max, "shift identity " + c.label + " |z| = " + detail::fmt(z));
  }
  return result;
}

// ---------------------------------------------------------------------------
// gmc-circle: the Gamma closed form against its defining quadrature, and the
// paired second-moment estimator against that oracle.

inline ExperimentResult run_gmc_circle(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t pair_reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("pair_reps", 100000);
  const auto n = pr.get<std::size_t>("n", 2048);
  const auto nested_reps = pr.get<std::size_t>("nested_reps", 400);
  auto gammas = pr.get<std::vector<double>>("gammas", {0.0, 0.25, 0.5});
  const double rel_tol = pr.get<double>("rel_tol", 0.05);
  const double dual_tol = pr.get<double>("dual_tol", 1e-8);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;
  std::size_t idx = 0;
  for (double gamma : gammas) {
    detail::Stopwatch sw;
    const double oracle = circle_intersection_exponential(gamma);
    const double quad = circle_intersection_quadrature(gamma);
    add_exact_row(result, "gmc-circle", "circle_exponential_g" + detail::fmt(gamma), n, oracle,
                  quad, sw.ms(), cfg.seed);
    add_check(result, std::abs(oracle - quad) <= dual_tol,
              "gamma=" + detail::fmt(gamma) + " closed form vs quadrature gap " +
                  detail::fmt(std::abs(oracle - quad)));

    CircleGmcShift shift(gamma, n);
    auto [nested, paired] = second_moment(shift, n, nested_reps, derive_seed(cfg.seed, idx++),
                                          16, workers, pair_reps);
    add_row(result, "gmc-circle", paired, oracle, sw.ms());
    add_row(result, "gmc-circle", nested, oracle, sw.ms());
    if (gamma == 0.0) {
      add_check(result, paired.mean == 1.0 && paired.std_err == 0.0,
                "gamma=0 paired estimator exactly 1");
    } else {
      double rel = std::abs(paired.mean - oracle) / oracle;
      add_check(result, rel <= rel_tol,
                "gamma=" + detail::fmt(gamma) + " paired second moment within " +
                    detail::fmt(100 * rel_tol) + "% (got " + detail::fmt(100 * rel) + "%)");
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// chain: MC solution rows against e^{tK} for the symmetric 2-state generator
// and a seeded random 4-state generator.

inline ChainModel symmetric_two_state(double t) {
  ChainModel m;
  m.K = {{-1.0, 1.0}, {1.0, -1.0}};
  m.start = 0;
  m.horizon = t;
  return m;
}

// Off-diagonal rates uniform in [0.2, 1.0); diagonal balances the row.
inline ChainModel random_chain(std::size_t d, std::uint64_t seed, double t) {
  RngStream rng(seed);
  ChainModel m;
  m.K.assign(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (i == j) continue;
      m.K[i][j] = 0.2 + 0.8 * rng.uniform();
      row += m.K[i][j];
    }
    m.K[i][i] = -row;
  }
  m.start = 0;
  m.horizon = t;
  return m;
}

inline ExperimentResult run_chain(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("reps", 40000);
  const double z_max = pr.get<double>("z_max", 4.0);
  const double t = pr.get<double>("t", 1.0);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;

  struct Case {
    std::string name;
    ChainModel model;
  };
  std::vector<Case> cases = {{"two_state", symmetric_two_state(t)},
                             {"random4", random_chain(4, derive_seed(cfg.seed, 77), t)}};
  std::size_t idx = 0;
  for (const Case& c : cases) {
    detail::Stopwatch sw;
    auto exact = chain_transition_exact(c.model);
    ChainRowEstimate est = chain_row_joint_mc(c.model, reps, derive_seed(cfg.seed, idx++), workers);
    const std::size_t d = c.model.K.size();
    double worst_z = 0.0;
    for (std::size_t y = 0; y < d; ++y) {
      MCEstimate e = est.by_state[y];
      e.label = "chain_" + c.name + "_y" + std::to_string(y);
      double oracle = exact[c.model.start][y];
      add_row(result, "chain", e, oracle, sw.ms());
      if (e.std_err > 0.0) worst_z = std::max(worst_z, std::abs(e.mean - oracle) / e.std_err);
    }
    MCEstimate tot = est.total;
    tot.label = "chain_" + c.name + "_total";
    add_row(result, "chain", tot, 1.0, sw.ms());
    add_check(result, worst_z <= z_max,
              "chain " + c.name + " entrywise worst |z| = " + detail::fmt(worst_z));
  }
  return result;
}

// ---------------------------------------------------------------------------
// lattice: exact partition normalization and the exact two-route shift
// identity; no Monte Carlo anywhere.

inline ExperimentResult run_lattice(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const int n_steps_max = pr.get<int>("n_steps_max", 6);
  const double tol = pr.get<double>("tol", 1e-10);
  pr.finish();
  ExperimentResult result;
  double worst_mean = 0.0;
  for (int n = 0; n <= n_steps_max; ++n) {
    detail::Stopwatch sw;
    LatticeModel model(n);
    double mean = lattice_mean_partition_quadrature(model);
    add_exact_row(result, "lattice", "lattice_mean_n" + std::to_string(n),
                  static_cast<std::size_t>(n), mean, 1.0, sw.ms(), cfg.seed);
    worst_mean = std::max(worst_mean, std::abs(mean - 1.0));
  }
  add_check(result, worst_mean <= tol,
            "E_P[Z] = 1 via Gauss-Hermite, worst gap " + detail::fmt(worst_mean));

  double worst_gap = 0.0;
  for (int n = 1; n <= n_steps_max; ++n) {
    LatticeModel model(n);
    const std::size_t s1 = model.site_index(1, 1);
    const std::size_t s2 = model.site_index(n, n % 2 == 0 ? 0 : 1);
    std::vector<std::pair<std::string, LatticePoly>> fs;
    fs.push_back({"one", LatticePoly{{LatticePoly::Term{1.0, {}}}}});
    fs.push_back({"site", LatticePoly{{LatticePoly::Term{1.0, {{s1, 1}}}}}});
    fs.push_back({"pair", LatticePoly{{LatticePoly::Term{1.0, {{s1, 1}, {s2, 1}}}}}});
    for (auto& [name, F] : fs) {
      detail::Stopwatch sw;
      auto [lhs, rhs] = lattice_shift_identity_exact(model, F);
      add_exact_row(result, "lattice", "lattice_identity_" + name + "_n" + std::to_string(n),
                    static_cast<std::size_t>(n), lhs, rhs, sw.ms(), cfg.seed);
      worst_gap = std::max(worst_gap, std::abs(lhs - rhs));
    }
  }
  add_check(result, worst_gap <= tol,
            "shift identity LHS = RHS exactly, worst gap " + detail::fmt(worst_gap));
  return result;
}

// ---------------------------------------------------------------------------
// milt-moments: moment oracles and MC moments of the intersection functional.
// mode selects sections; "all" runs each with the configured replica counts.

inline ExperimentResult run_milt_moments(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::string mode = pr.get<std::string>("mode", "all");
  const std::size_t pair_reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("pair_reps", 4000);
  const auto n_bridge = pr.get<std::size_t>("n_bridge", 256);
  const auto n_plane = pr.get<std::size_t>("n_plane", 512);
  const auto steps = pr.get<std::size_t>("steps", 0);
  const double z_max = pr.get<double>("z_max", 4.0);
  const double kappa = pr.get<double>("kappa", 4.0);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;
  const bool all = mode == "all";
  auto wants = [&](const char* m) { return all || mode == m; };

  if (wants("phi")) {
    for (double r : {0.5, 1.0, 2.0, 4.0}) {
      detail::Stopwatch sw;
      double v = phi_norm_sq(0.0, r);
      double oracle = r / kTwoPi;
      add_exact_row(result, "milt-moments", "phi_norm_sq_r" + detail::fmt(r), 0, v, oracle,
                    sw.ms(), cfg.seed);
      add_check(result, std::abs(v - oracle) <= 1e-8,
                "phi_norm_sq(0, " + detail::fmt(r) + ") = r/(2pi) within 1e-8");
    }
    detail::Stopwatch sw;
    double v10 = phi_norm_sq(10.0, 1.0);
    add_exact_row(result, "milt-moments", "phi_norm_sq_N10", 0, v10, std::nullopt, sw.ms(),
                  cfg.seed);
    add_check(result, v10 <= 1.0 / std::sqrt(8.0) / 10.0 && v10 <= 1.0 / kTwoPi,
              "phi_norm_sq(10, 1) below both closed-form bounds");
  }

  if (wants("bridge")) {
    detail::Stopwatch sw;
    BasisSpec strip = bridge_strip_basis(1.0, 0.5, 2.5e-4, kappa);
    PathShiftConfig law = bridge_1p1_law(1.0, steps);
    auto moments = alpha_pair_moments(law, law, strip, n_bridge, 2, pair_reps,
                                      derive_seed(cfg.seed, 11), workers);
    for (int k = 1; k <= 2; ++k) {
      double oracle = bridge_1p1_moment_exact(k, 1.0);
      add_row(result, "milt-moments", moments[static_cast<std::size_t>(k - 1)], oracle, sw.ms());
      double rel = std::abs(moments[static_cast<std::size_t>(k - 1)].mean - oracle) / oracle;
      result.checks.push_back("INFO: bridge alpha moment k=" + std::to_string(k) +
                              " relative gap " + detail::fmt(100 * rel) + "% (truncation at n=" +
                              std::to_string(n_bridge) + ")");
    }
  }

  if (wants("cross")) {
    detail::Stopwatch sw;
    BasisSpec plane;
    plane.kind = BasisKind::hermite_plane_tensor;
    PathShiftConfig law = planar_motion_law(1.0, steps);
    auto moments = alpha_pair_moments(law, law, plane, n_plane, 1, pair_reps,
                                      derive_seed(cfg.seed, 12), workers);
    const double oracle = expected_cross_alpha(1.0, 2.0);
    MCEstimate est = moments[0];
    est.label = "cross_alpha_s1_t2";
    add_row(result, "milt-moments", est, oracle, sw.ms());
    double rel = std::abs(est.mean - oracle) / oracle;
    add_check(result, rel <= 0.03 + z_max * est.std_err / oracle,
              "cross alpha within 3% + noise of log2/pi (got " + detail::fmt(100 * rel) + "%)");
  }

  if (wants("levy")) {
    detail::Stopwatch sw;
    BasisSpec plane;
    plane.kind = BasisKind::hermite_plane_tensor;
    PathShiftConfig law = planar_motion_law(1.0, steps);
    auto moments = alpha_pair_moments(law, law, plane, n_plane, 3, pair_reps,
                                      derive_seed(cfg.seed, 13), workers);
    for (int k = 1; k <= 3; ++k) {
      const double r = static_cast<double>(k);
      const double bound = levy_moment_bound(k, r, r / kTwoPi);
      const MCEstimate& est = moments[static_cast<std::size_t>(k - 1)];
      add_row(result, "milt-moments", est, bound, sw.ms());
      add_check(result, est.mean <= bound + z_max * est.std_err,
                "motion alpha moment k=" + std::to_string(k) + " below bound " +
                    detail::fmt(bound));
    }
  }

  if (wants("gamma")) {
    BasisSpec plane;
    plane.kind = BasisKind::hermite_plane_tensor;
    for (int depth : {2, 3}) {
      detail::Stopwatch sw;
      DyadicGamma g = self_intersection_gamma(
          planar_motion_law(1.0, steps), plane, n_plane, depth, pair_reps, pair_reps,
          derive_seed(cfg.seed, 14 + static_cast<std::uint64_t>(depth)), workers);
      MCEstimate est = g.estimate;
      est.label = "self_intersection_gamma_D" + std::to_string(depth);
      add_row(result, "milt-moments", est, 0.0, sw.ms());
      // The centering pool is as noisy as the main sample, so the effective
      // stderr of the mean carries an extra sqrt(2).
      double sigma = est.std_err * std::sqrt(2.0);
      double z = sigma > 0.0 ? std::abs(est.mean) / sigma : 0.0;
      add_check(result, z <= z_max,
                "centered self-intersection depth " + std::to_string(depth) + " |z| = " +
                    detail::fmt(z));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// she1d: the 1+1 solver, its chaos-coefficient cross-check, and the
// telescoping between the second moment and the martingale increments.

inline ExperimentResult run_she1d(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("reps", 20000);
  const auto n = pr.get<std::size_t>("n", 16);
  const double x = pr.get<double>("x", 0.0);
  const double t = pr.get<double>("t", 1.0);
  const auto q_reps = pr.get<std::size_t>("q_reps", 1024);
  const double z_max = pr.get<double>("z_max", 4.0);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;

  SheQuery q;
  q.dimension = SheDim::one_plus_one;
  q.start_point = {0.0};
  q.end_point = {x};
  q.end_time = t;
  q.q_reps = q_reps;
  q.seed = derive_seed(cfg.seed, 1);
  q.grid = GridKind::graded;

  const std::vector<double> xr{x};
  const double kernel = heat_kernel(SheDim::one_plus_one, xr, t);
  {
    detail::Stopwatch sw;
    q.n = 0;
    MCEstimate e0 = solve_wick(q, {}, workers);
    add_row(result, "she1d", e0, kernel, sw.ms());
    add_check(result, e0.mean == kernel && e0.std_err == 0.0, "n=0 solution equals the kernel");
  }
  {
    detail::Stopwatch sw;
    q.n = n;
    std::vector<double> xi = gaussian_vector(derive_seed(cfg.seed, 2), n);
    MCEstimate en = solve_wick(q, xi, workers);
    add_row(result, "she1d", en, std::nullopt, sw.ms());
    add_check(result, en.mean > 0.0, "n>0 solution positive at a sampled field");
  }
  {
    detail::Stopwatch sw;
    ChaosCoefficient cc = chaos_coefficient_1p1(1, 0.0, 0.5 * t, x, t, reps,
                                                derive_seed(cfg.seed, 3), 0.0, 1024, workers);
    add_row(result, "she1d", cc.marginal, cc.kernel_product, sw.ms());
    double gap = std::abs(cc.marginal.mean - cc.kernel_product);
    double tol = 0.05 * cc.kernel_product + z_max * cc.marginal.std_err;
    add_check(result, gap <= tol,
              "chaos coefficient vs kernel product gap " + detail::fmt(gap) + " <= " +
                  detail::fmt(tol));
  }
  {
    // E[Z_n^2] from paired draws against the telescoped 1 + sum q_k; the
    // increment stderrs add in L1, which dominates their correlation.
    detail::Stopwatch sw;
    PathOccupationShift shift(bridge_1p1_law(t, 0), bridge_strip_basis(t), n);
    auto [nested, paired] = second_moment(shift, n, reps / 16 + 2, derive_seed(cfg.seed, 4), 32,
                                          workers, reps);
    auto incs = martingale_increments(shift, n, reps / 16 + 2, derive_seed(cfg.seed, 5), 32,
                                      workers);
    double partial = 1.0;
    double sigma_l1 = 0.0;
    for (const MCEstimate& qk : incs) {
      partial += qk.mean;
      sigma_l1 += qk.std_err;
    }
    add_row(result, "she1d", paired, partial, sw.ms());
    add_row(result, "she1d", nested, partial, sw.ms());
    const double ceiling = 2.7302344337037002;  // E e^alpha at t=1, series of exact moments
    add_exact_row(result, "she1d", "telescoped_second_moment", n, partial, ceiling, sw.ms(),
                  cfg.seed);
    double gap = std::abs(paired.mean - partial);
    double tol = z_max * (paired.std_err + sigma_l1);
    add_check(result, gap <= tol,
              "second moment telescopes through increments, gap " + detail::fmt(gap) + " <= " +
                  detail::fmt(tol));
    add_check(result, paired.mean <= ceiling + z_max * paired.std_err,
              "truncated second moment below the full-intersection ceiling");
  }
  return result;
}

// ---------------------------------------------------------------------------
// she2d: the planar solver at small t, with the L2-regime stabilization
// diagnostic: second-moment increments shrink under n-doubling.

inline ExperimentResult run_she2d(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t pair_reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("pair_reps", 4000);
  const double t = pr.get<double>("t", 0.2);
  const auto q_reps = pr.get<std::size_t>("q_reps", 1024);
  auto n_list = pr.get<std::vector<std::size_t>>("n_list", {128, 256, 512});
  const auto steps = pr.get<std::size_t>("steps", 2048);
  const double z_max = pr.get<double>("z_max", 4.0);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;

  SheQuery q;
  q.dimension = SheDim::planar;
  q.end_point = {0.0, 0.0};
  q.end_time = t;
  q.q_reps = q_reps;
  q.seed = derive_seed(cfg.seed, 1);

  const std::vector<double> origin{0.0, 0.0};
  const double kernel = heat_kernel(SheDim::planar, origin, t);
  {
    detail::Stopwatch sw;
    q.n = 0;
    MCEstimate e0 = solve_wick(q, {}, workers);
    add_row(result, "she2d", e0, kernel, sw.ms());
    add_check(result, e0.mean == kernel && e0.std_err == 0.0, "n=0 solution equals the kernel");
  }

  BasisSpec plane;
  plane.kind = BasisKind::hermite_plane_tensor;
  std::vector<double> means, sigmas;
  for (std::size_t n : n_list) {
    detail::Stopwatch sw;
    PathOccupationShift shift(planar_bridge_law(t, steps), plane, n);
    auto [nested, paired] = second_moment(shift, n, pair_reps / 16 + 2,
                                          derive_seed(cfg.seed, 100 + n), 16, workers, pair_reps);
    add_row(result, "she2d", paired, std::nullopt, sw.ms());
    means.push_back(paired.mean);
    sigmas.push_back(paired.std_err);
  }
  if (means.size() >= 3) {
    double inc1 = means[1] - means[0];
    double inc2 = means[2] - means[1];
    double sigma = std::sqrt(sigmas[0] * sigmas[0] + 4.0 * sigmas[1] * sigmas[1] +
                             sigmas[2] * sigmas[2]);
    add_check(result, inc2 <= inc1 + z_max * sigma,
              "small-t second moment stabilizes under n-doubling (increments " +
                  detail::fmt(inc1) + " -> " + detail::fmt(inc2) + ")");
  }
  return result;
}

// ---------------------------------------------------------------------------
// kpz-couple: coupled-coordinate gap decay and the log-scale bookkeeping.

inline ExperimentResult run_kpz_couple(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("reps", 2000);
  const auto n = pr.get<std::size_t>("n", 16);
  auto N_list = pr.get<std::vector<double>>("N_list", {4.0, 16.0, 64.0});
  const double y = pr.get<double>("y", 0.0);
  const double rho = pr.get<double>("rho", 1.0);
  const auto steps = pr.get<std::size_t>("steps", 0);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;
  detail::Stopwatch sw;
  auto rows = kpz_coupling_experiment(N_list, n, reps, cfg.seed, y, rho, workers, steps);
  double d_first = 0.0, d_last = 0.0;
  for (const KpzCouplingRow& r : rows) {
    add_exact_row(result, "kpz-couple", "kpz_dN_N" + detail::fmt(r.N), n, r.d_N, std::nullopt,
                  sw.ms(), cfg.seed);
    MCEstimate z = r.z;
    z.label = "kpz_Z_coupled_N" + detail::fmt(r.N);
    add_row(result, "kpz-couple", z, std::nullopt, sw.ms());
    add_exact_row(result, "kpz-couple", "kpz_log_scale_N" + detail::fmt(r.N), n, r.log_scale,
                  std::nullopt, sw.ms(), cfg.seed);
    if (r.N == N_list.front()) d_first = r.d_N;
    if (r.N == N_list.back()) d_last = r.d_N;
  }
  if (N_list.size() >= 2 && N_list.back() >= 2.0 * N_list.front())
    add_check(result, d_last <= 0.5 * d_first,
              "coupling gap halves: d(" + detail::fmt(N_list.back()) + ") = " +
                  detail::fmt(d_last) + " <= d(" + detail::fmt(N_list.front()) + ")/2 = " +
                  detail::fmt(0.5 * d_first));
  return result;
}

// ---------------------------------------------------------------------------
// alpha-variance: E[alpha^2] for the squeezed planar bridges against the
// limit 1, for each configured (nu, y) cell; the within-10% check applies at
// nu = 0.05 and the y-pair agreement at nu = 0.1, matching the regimes where
// the limit statement is being probed.

inline ExperimentResult run_alpha_variance(const ExperimentConfig& cfg) {
  ParamReader pr(cfg.params);
  const std::size_t reps = cfg.reps ? cfg.reps : pr.get<std::size_t>("reps", 2000);
  const auto n = pr.get<std::size_t>("n", 64);
  auto nu_list = pr.get<std::vector<double>>("nu_list", {0.2, 0.1, 0.05});
  auto y_list = pr.get<std::vector<double>>("y_list", {0.0, 2.0});
  const auto steps = pr.get<std::size_t>("steps", 0);
  const double z_max = pr.get<double>("z_max", 4.0);
  const double rel_tol = pr.get<double>("rel_tol", 0.10);
  pr.finish();
  const int workers = resolve_workers(cfg.workers);
  ExperimentResult result;

  std::map<std::pair<double, double>, MCEstimate> cells;
  for (double y : y_list) {
    detail::Stopwatch sw;
    auto rows = alpha_variance_convergence(nu_list, y, n, reps, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(100.0 * y)),
                                           workers, steps);
    for (AlphaVarianceRow& r : rows) {
      MCEstimate est = r.alpha_sq;
      est.label = "alpha_variance_nu" + detail::fmt(r.nu) + "_y" + detail::fmt(y);
      add_row(result, "alpha-variance", est, r.oracle, sw.ms());
      cells[{r.nu, y}] = est;
      if (r.nu == 0.05) {
        double rel = std::abs(est.mean - 1.0);
        add_check(result, rel <= rel_tol,
                  "nu=0.05 y=" + detail::fmt(y) + " within " + detail::fmt(100 * rel_tol) +
                      "% of 1 (got " + detail::fmt(100 * rel) + "%)");
      }
    }
  }
  if (y_list.size() == 2) {
    for (double nu : nu_list) {
      if (nu != 0.1) continue;
      const MCEstimate& a = cells.at({nu, y_list[0]});
      const MCEstimate& b = cells.at({nu, y_list[1]});
      double gap = std::abs(a.mean - b.mean);
      double sigma = std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
      add_check(result, gap <= z_max * sigma,
                "nu=0.1 y-pair gap " + detail::fmt(gap) + " <= " + detail::fmt(z_max) + " x " +
                    detail::fmt(sigma));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

inline const std::map<std::string, ExperimentResult (*)(const ExperimentConfig&)>&
experiment_registry() {
  static const std::map<std::string, ExperimentResult (*)(const ExperimentConfig&)> registry = {
      {"gram", run_gram},
      {"hermite-check", run_hermite_check},
      {"adjoint-check", run_adjoint_check},
      {"zn", run_zn},
      {"shift-identity", run_shift_identity},
      {"gmc-circle", run_gmc_circle},
      {"milt-moments", run_milt_moments},
      {"chain", run_chain},
      {"lattice", run_lattice},
      {"she1d", run_she1d},
      {"she2d", run_she2d},
      {"kpz-couple", run_kpz_couple},
      {"alpha-variance", run_alpha_variance},
  };
  return registry;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  auto it = experiment_registry().find(cfg.experiment);
  if (it == experiment_registry().end())
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  return it->second(cfg);
}

}  // namespace wickflow
