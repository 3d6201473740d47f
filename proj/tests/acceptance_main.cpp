// Standalone acceptance runner: one line per criterion, details indented,
// nonzero exit when anything fails. Seed and worker count come from the
// environment so CI can pin them without a flag parser.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "wickflow/acceptance.hpp"

int main() {
  std::uint64_t seed = 20260825;
  int workers = 0;
  if (const char* s = std::getenv("WICKFLOW_ACCEPT_SEED")) seed = std::strtoull(s, nullptr, 10);
  if (const char* w = std::getenv("WICKFLOW_ACCEPT_WORKERS")) workers = std::atoi(w);

  std::size_t failed = 0;
  auto results = wickflow::run_acceptance(seed, workers, [&](const auto& c) {
    std::printf("%s\n", wickflow::format_criterion_line(c).c_str());
    for (const auto& d : c.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    if (!c.passed) ++failed;
  });
  std::printf("acceptance: %zu/%zu criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
