#pragma once

#include <filesystem>
#include <iosfwd>

#include "nip/scenario.hpp"

namespace nip {

struct SummaryRow {
  std::string check;
  double value = 0.0;
  double tol = 0.0;
  bool pass = true;
};

struct RunReport {
  std::string scenario;
  std::vector<SummaryRow> summary;
  int exit_status = 0;  // 0 iff every enabled check passed
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
};

struct RunOverrides {
  std::optional<double> dt;
  std::optional<std::filesystem::path> out_dir;
  bool strict = false;  // enforce every known check, overriding config toggles
};

/// $NIPLAB_OUT when set, ./out otherwise.
std::filesystem::path default_out_dir();

/// Executes the scenario, writes <name>.csv and <name>_summary.csv into the
/// output directory and returns the per-check summary.
RunReport run_scenario(const PreparedScenario& sc, const RunOverrides& ov = {});

/// Runs the double-propagation picture-equivalence check declared in the
/// config's cross section.
RunReport cross_check_scenario(const PreparedScenario& sc, const RunOverrides& ov = {});

struct BenchRow {
  Eigen::Index dim = 0;
  std::string route;
  double wall_ms = 0.0;
  double per_step_us = 0.0;
  double max_deviation = 0.0;  // cross-route, same value on both rows
  bool valid = true;           // deviation within the benchmark gate
};

struct BenchReport {
  std::string scenario;
  std::vector<BenchRow> rows;
  int exit_status = 0;
  std::filesystem::path csv_path;
};

/// Times the operator-ODE metric route against the propagated-basis route
/// over a family of dimensions. Rows are valid only when the two routes
/// agree to 1e-6; timings are reported, never asserted.
BenchReport benchmark_metric_routes(const PreparedScenario& sc,
                                    const std::vector<Eigen::Index>& dims,
                                    const RunOverrides& ov = {});

void print_report(const RunReport& rep, std::ostream& os);
void print_bench(const BenchReport& rep, std::ostream& os);

}  // namespace nip
