#pragma once

// Replica-parallel execution. Workers fill disjoint slices of a preallocated
// result buffer indexed by replica; the caller reduces that buffer in index
// order. Results are therefore bit-identical for any worker count.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace wickflow {

// Worker-count resolution order: explicit request > WICKFLOW_WORKERS > number
// of hardware threads. Zero or negative means "auto".
inline int resolve_workers(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WICKFLOW_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Evaluates f(i) for i in [0, reps) and returns the values in replica order.
// f must be safe to call concurrently for distinct i.
template <typename T, typename F>
std::vector<T> replica_map(std::size_t reps, int workers, F&& f) {
  std::vector<T> out(reps);
  if (reps == 0) return out;
  std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(workers < 1 ? 1 : workers), reps);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < reps; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::exception_ptr error;
  std::mutex error_mu;
  const std::size_t chunk = (reps + nthreads - 1) / nthreads;
  for (std::size_t w = 0; w < nthreads; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(reps, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace wickflow
