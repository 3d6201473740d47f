// Experiment driver. One subcommand per experiment plus `acceptance` for the
// full release suite. Exit codes: 0 all contracts pass, 1 a contract failed
// (results still written), 2 config problem (nothing written), 3 precondition
// or runtime failure inside a module.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wickflow/acceptance.hpp"
#include "wickflow/csv.hpp"
#include "wickflow/experiments.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t reps = 0;
  bool reps_set = false;
  std::string workers;
  std::string out_dir;
};

wickflow::ExperimentConfig assemble_config(const std::string& experiment,
                                           const CliOverrides& cli) {
  wickflow::ExperimentConfig cfg;
  if (!cli.config_path.empty()) {
    cfg = wickflow::load_config(cli.config_path);
    if (cfg.experiment != experiment)
      throw wickflow::ConfigError("config is for '" + cfg.experiment + "', subcommand is '" +
                                  experiment + "'");
  } else {
    cfg.experiment = experiment;
  }
  if (cli.seed_set) cfg.seed = cli.seed;
  if (cli.reps_set) cfg.reps = cli.reps;
  if (!cli.workers.empty()) {
    if (cli.workers == "auto") {
      cfg.workers = 0;
    } else {
      try {
        cfg.workers = std::stoi(cli.workers);
      } catch (const std::exception&) {
        throw wickflow::ConfigError("--workers expects a count or \"auto\"");
      }
      if (cfg.workers < 0) throw wickflow::ConfigError("--workers must be >= 0");
    }
  }
  if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
  return cfg;
}

void emit_rows(const std::vector<wickflow::ResultRow>& rows, const std::string& out_dir,
               const std::string& experiment) {
  if (out_dir.empty()) {
    std::fputs(wickflow::csv_table(rows).c_str(), stdout);
    return;
  }
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/" + experiment + ".csv";
  wickflow::write_csv(path, rows);
  std::printf("wrote %s (%zu rows)\n", path.c_str(), rows.size());
}

int run_one(const std::string& experiment, const CliOverrides& cli) {
  wickflow::ExperimentConfig cfg = assemble_config(experiment, cli);
  wickflow::ExperimentResult result = wickflow::run_experiment(cfg);
  for (const std::string& line : result.checks) std::printf("%s\n", line.c_str());
  emit_rows(result.rows, cfg.out_dir, experiment);
  std::printf("%s: %s\n", experiment.c_str(), result.passed ? "PASS" : "FAIL");
  return result.passed ? 0 : 1;
}

int run_acceptance_cmd(const CliOverrides& cli) {
  wickflow::ExperimentConfig cfg = assemble_config("acceptance", cli);
  std::vector<wickflow::ResultRow> rows;
  std::size_t failures = 0;
  auto results = wickflow::run_acceptance(cfg.seed, cfg.workers, [&](const auto& c) {
    std::printf("%s\n", wickflow::format_criterion_line(c).c_str());
    for (const std::string& line : c.details) std::printf("  %s\n", line.c_str());
    std::fflush(stdout);
    for (const wickflow::ResultRow& r : c.rows) rows.push_back(r);
    if (!c.passed) ++failures;
  });
  emit_rows(rows, cfg.out_dir, "acceptance");
  std::printf("acceptance: %zu/%zu criteria passed\n", results.size() - failures, results.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wickflow: randomized-shift and intersection local time experiments"};
  app.require_subcommand(1);

  std::vector<std::string> names;
  for (const auto& [name, fn] : wickflow::experiment_registry()) names.push_back(name);
  names.push_back("acceptance");

  CliOverrides cli;
  std::string chosen;
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", cli.config_path, "JSON config path");
    sub->add_option("--seed", cli.seed, "master seed")->each([&cli](const std::string&) {
      cli.seed_set = true;
    });
    sub->add_option("--reps", cli.reps, "replica count override")
        ->each([&cli](const std::string&) { cli.reps_set = true; });
    sub->add_option("--workers", cli.workers, "worker count or \"auto\"");
    sub->add_option("--out", cli.out_dir, "output directory for CSV");
    sub->callback([&chosen, name]() { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (chosen == "acceptance") return run_acceptance_cmd(cli);
    return run_one(chosen, cli);
  } catch (const wickflow::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "precondition violation: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
