#pragma once

// Monte Carlo estimate container. Reductions happen over replica-ordered
// buffers (see parallel.hpp), so a given seed yields the same estimate for
// any worker count.

#include <cstdint>
#include <span>
#include <string>

#include "wickflow/mathutil.hpp"

namespace wickflow {

struct MCEstimate {
  double mean = 0.0;
  double std_err = 0.0;  // sample standard deviation / sqrt(reps)
  std::size_t reps = 0;
  std::size_t n = 0;  // truncation level of the underlying quantity
  std::uint64_t seed = 0;
  std::string label;
  bool heavy_tail = false;  // set when the sample kurtosis is extreme
};

// Sample kurtosis beyond which exponential averages are flagged as heavy
// tailed. The estimate is still returned; the flag feeds CSV diagnostics.
inline constexpr double kHeavyTailKurtosis = 100.0;

inline MCEstimate estimate_from_samples(std::span<const double> xs, std::size_t n,
                                        std::uint64_t seed, std::string label,
                                        bool check_tail = false) {
  MCEstimate e;
  e.reps = xs.size();
  e.n = n;
  e.seed = seed;
  e.label = std::move(label);
  MeanVar mv = mean_and_variance(xs);
  e.mean = mv.mean;
  e.std_err = xs.size() > 1 ? std::sqrt(mv.var / static_cast<double>(xs.size())) : 0.0;
  if (check_tail) e.heavy_tail = excess_kurtosis(xs) > kHeavyTailKurtosis;
  return e;
}

inline double z_score(const MCEstimate& e, double oracle) {
  if (e.std_err == 0.0) return e.mean == oracle ? 0.0 : (e.mean > oracle ? 1e300 : -1e300);
  return (e.mean - oracle) / e.std_err;
}

}  // namespace wickflow
