#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "wickflow/config.hpp"
#include "wickflow/csv.hpp"

using namespace wickflow;

TEST_CASE("csv header and column order") {
  REQUIRE(std::string(kCsvHeader) ==
          "experiment,label,n,reps,mean,stderr,oracle,z_score,wall_time_ms,seed");
  ResultRow row;
  row.experiment = "demo";
  row.label = "thing";
  row.n = 3;
  row.reps = 7;
  row.mean = 0.5;
  row.std_err = 0.125;
  row.seed = 42;
  REQUIRE(csv_line(row) == "demo,thing,3,7,0.5,0.125,,,0,42");
  row.oracle = 1.0;
  row.z = -4.0;
  REQUIRE(csv_line(row) == "demo,thing,3,7,0.5,0.125,1,-4,0,42");
}

TEST_CASE("doubles round trip through the table") {
  ResultRow row;
  row.mean = 0.1 + 0.2;  // 0.30000000000000004, needs all 17 digits
  row.std_err = 1e-17;
  std::string line = csv_line(row);
  REQUIRE(line.find("0.30000000000000004") != std::string::npos);
  REQUIRE(line.find("1.0000000000000001e-17") != std::string::npos);
}

TEST_CASE("labels with commas get quoted") {
  REQUIRE(detail::csv_escape("plain_label") == "plain_label");
  REQUIRE(detail::csv_escape("a,b") == "\"a,b\"");
  REQUIRE(detail::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("row_from_estimate carries the z score") {
  MCEstimate est;
  est.mean = 1.2;
  est.std_err = 0.1;
  est.reps = 100;
  est.n = 5;
  est.seed = 9;
  est.label = "lbl";
  ResultRow row = row_from_estimate("exp", est, 1.0);
  REQUIRE(row.label == "lbl");
  REQUIRE(row.oracle.has_value());
  REQUIRE(row.z.has_value());
  REQUIRE(std::abs(*row.z - 2.0) <= 1e-12);
  ResultRow bare = row_from_estimate("exp", est);
  REQUIRE_FALSE(bare.oracle.has_value());
  REQUIRE_FALSE(bare.z.has_value());
}

TEST_CASE("write_csv produces the same bytes as csv_table") {
  std::vector<ResultRow> rows(2);
  rows[0].experiment = "a";
  rows[1].experiment = "b";
  rows[1].mean = -0.25;
  const auto path = std::filesystem::temp_directory_path() / "wickflow_csv_test.csv";
  write_csv(path.string(), rows);
  std::ifstream f(path, std::ios::binary);
  std::string got((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  REQUIRE(got == csv_table(rows));
  std::filesystem::remove(path);
  REQUIRE_THROWS_AS(write_csv("/nonexistent_dir_zzz/x.csv", rows), std::runtime_error);
}

TEST_CASE("config parsing applies defaults and rejects junk") {
  auto cfg = config_from_json(nlohmann::json::parse(R"({"experiment":"gram"})"));
  REQUIRE(cfg.experiment == "gram");
  REQUIRE(cfg.seed == 20260825);
  REQUIRE(cfg.reps == 0);
  REQUIRE(cfg.workers == 0);
  REQUIRE(cfg.out_dir.empty());
  REQUIRE(cfg.params.is_object());

  cfg = config_from_json(nlohmann::json::parse(
      R"({"experiment":"zn","seed":7,"reps":500,"workers":"auto","out":"results"})"));
  REQUIRE(cfg.seed == 7);
  REQUIRE(cfg.reps == 500);
  REQUIRE(cfg.workers == 0);
  REQUIRE(cfg.out_dir == "results");

  REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"seed":1})")), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"experiment":3})")), ConfigError);
  REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(
                        R"({"experiment":"zn","bogus":1})")),
                    ConfigError);
  REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(
                        R"({"experiment":"zn","workers":-1})")),
                    ConfigError);
  REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(
                        R"({"experiment":"zn","workers":"many"})")),
                    ConfigError);
  REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(
                        R"({"experiment":"zn","params":[1,2]})")),
                    ConfigError);
  REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse("[1,2,3]")), ConfigError);
}

TEST_CASE("param reader drains keys and flags leftovers") {
  auto params = nlohmann::json::parse(R"({"t":2.5,"n":16,"mode":"all"})");
  ParamReader reader(params);
  REQUIRE(reader.get<double>("t", 1.0) == 2.5);
  REQUIRE(reader.get<std::size_t>("n", 4) == 16);
  REQUIRE(reader.get<std::string>("mode", "none") == "all");
  REQUIRE(reader.get<double>("absent", -3.0) == -3.0);
  REQUIRE_NOTHROW(reader.finish());

  ParamReader partial(params);
  partial.get<double>("t", 1.0);
  REQUIRE_THROWS_AS(partial.finish(), ConfigError);

  ParamReader typed(params);
  REQUIRE_THROWS_AS(typed.get<std::string>("t", "x"), ConfigError);
}

TEST_CASE("load_config reports missing and malformed files") {
  REQUIRE_THROWS_AS(load_config("/no/such/config.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "wickflow_bad_config.json";
  {
    std::ofstream f(path);
    f << "{ not json";
  }
  REQUIRE_THROWS_AS(load_config(path.string()), ConfigError);
  {
    std::ofstream f(path);
    f << R"({"experiment":"gram","seed":11})";
  }
  auto cfg = load_config(path.string());
  REQUIRE(cfg.experiment == "gram");
  REQUIRE(cfg.seed == 11);
  std::filesystem::remove(path);
}
