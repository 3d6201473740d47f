#pragma once

// Result rows and their CSV serialization. Column order is fixed:
//   experiment,label,n,reps,mean,stderr,oracle,z_score,wall_time_ms,seed
// oracle and z_score are nullable (empty cells). Doubles are written with 17
// significant digits so equal doubles serialize to equal bytes and reruns
// with the same seed produce byte-identical files apart from wall_time_ms.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wickflow/mc.hpp"

namespace wickflow {

struct ResultRow {
  std::string experiment;
  std::string label;
  std::size_t n = 0;
  std::size_t reps = 0;
  double mean = 0.0;
  double std_err = 0.0;
  std::optional<double> oracle;
  std::optional<double> z;
  double wall_time_ms = 0.0;
  std::uint64_t seed = 0;
};

inline ResultRow row_from_estimate(const std::string& experiment, const MCEstimate& est,
                                   std::optional<double> oracle = std::nullopt) {
  ResultRow row;
  row.experiment = experiment;
  row.label = est.label;
  row.n = est.n;
  row.reps = est.reps;
  row.mean = est.mean;
  row.std_err = est.std_err;
  row.oracle = oracle;
  if (oracle) row.z = z_score(est, *oracle);
  row.seed = est.seed;
  return row;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Commas and quotes never occur in the fixed label vocabulary; escaping is
// still applied so ad hoc labels cannot corrupt the table.
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline const char* kCsvHeader =
    "experiment,label,n,reps,mean,stderr,oracle,z_score,wall_time_ms,seed";

inline std::string csv_line(const ResultRow& row) {
  std::ostringstream os;
  os << detail::csv_escape(row.experiment) << ',' << detail::csv_escape(row.label) << ','
     << row.n << ',' << row.reps << ',' << detail::format_double(row.mean) << ','
     << detail::format_double(row.std_err) << ','
     << (row.oracle ? detail::format_double(*row.oracle) : std::string()) << ','
     << (row.z ? detail::format_double(*row.z) : std::string()) << ','
     << detail::format_double(row.wall_time_ms) << ',' << row.seed;
  return os.str();
}

inline std::string csv_table(const std::vector<ResultRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const ResultRow& row : rows) {
    out += csv_line(row);
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  f << csv_table(rows);
  if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace wickflow
