#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "wickflow/experiments.hpp"

using namespace wickflow;

namespace {

ExperimentConfig make_cfg(const std::string& name) {
  ExperimentConfig cfg;
  cfg.experiment = name;
  cfg.seed = 71;
  cfg.workers = 1;
  return cfg;
}

bool all_pass(const ExperimentResult& r) {
  for (const std::string& line : r.checks)
    if (line.rfind("PASS", 0) != 0) return false;
  return r.passed;
}

}  // namespace

TEST_CASE("registry holds every experiment") {
  const auto& reg = experiment_registry();
  REQUIRE(reg.size() == 13);
  REQUIRE(reg.count("gram") == 1);
  REQUIRE(reg.count("alpha-variance") == 1);
  ExperimentConfig cfg = make_cfg("no-such-experiment");
  REQUIRE_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("exact experiments pass with defaults") {
  for (const char* name : {"gram", "hermite-check", "lattice"}) {
    ExperimentConfig cfg = make_cfg(name);
    ExperimentResult r = run_experiment(cfg);
    INFO(name);
    REQUIRE(all_pass(r));
    REQUIRE_FALSE(r.rows.empty());
    REQUIRE_FALSE(r.checks.empty());
  }
}

TEST_CASE("unknown params are rejected before any work") {
  ExperimentConfig cfg = make_cfg("gram");
  cfg.params["bogus"] = 1;
  REQUIRE_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("small zn run holds the mean-one identity") {
  ExperimentConfig cfg = make_cfg("zn");
  cfg.reps = 400;
  cfg.params["q_reps"] = 16;
  cfg.params["n_planar"] = 8;
  cfg.params["n_1p1"] = 8;
  cfg.params["steps_planar"] = 64;
  cfg.params["steps_1p1"] = 64;
  ExperimentResult r = run_experiment(cfg);
  REQUIRE(all_pass(r));
  REQUIRE(r.rows.size() == 2);
  for (const ResultRow& row : r.rows) {
    REQUIRE(row.oracle.has_value());
    REQUIRE(*row.oracle == 0.0);
  }
}

TEST_CASE("small shift identity run") {
  ExperimentConfig cfg = make_cfg("shift-identity");
  cfg.reps = 400;
  cfg.params["q_reps"] = 8;
  cfg.params["n"] = 8;
  ExperimentResult r = run_experiment(cfg);
  REQUIRE(all_pass(r));
  REQUIRE(r.rows.size() == 4);
}

TEST_CASE("small chain run") {
  ExperimentConfig cfg = make_cfg("chain");
  cfg.reps = 5000;
  ExperimentResult r = run_experiment(cfg);
  REQUIRE(all_pass(r));
  for (const ResultRow& row : r.rows) REQUIRE(row.reps > 0);
}
