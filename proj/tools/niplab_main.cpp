#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nip/runner.hpp"

namespace {

// 0 = all checks pass, 1 = a check exceeded its tolerance,
// 2 = configuration problem, 3 = numerical failure mid-run.
int dispatch(const std::string& mode, const std::string& config_path,
             const nip::RunOverrides& ov, const std::vector<long>& dims) {
  const nip::PreparedScenario sc = nip::load_scenario(config_path);

  if (mode == "check") {
    std::cout << "config ok: " << sc.name << "\n";
    return 0;
  }
  if (mode == "run") {
    const nip::RunReport rep = nip::run_scenario(sc, ov);
    nip::print_report(rep, std::cout);
    std::cout << "csv: " << rep.csv_path.string() << "\n";
    return rep.exit_status;
  }
  if (mode == "cross") {
    const nip::RunReport rep = nip::cross_check_scenario(sc, ov);
    nip::print_report(rep, std::cout);
    return rep.exit_status;
  }
  if (mode == "bench") {
    std::vector<Eigen::Index> sizes(dims.begin(), dims.end());
    if (sizes.empty()) sizes = {2, 4, 8, 16};
    const nip::BenchReport rep = nip::benchmark_metric_routes(sc, sizes, ov);
    nip::print_bench(rep, std::cout);
    std::cout << "csv: " << rep.csv_path.string() << "\n";
    return rep.exit_status;
  }
  throw nip::Error(nip::Errc::config_error, "unknown mode " + mode);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"niplab - unitary quantum dynamics in non-Hermitian representations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  double dt_override = 0.0;
  bool strict = false;
  std::vector<long> dims;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "scenario config file")->required();
    cmd->add_option("--out", out_dir, "output directory (default: $NIPLAB_OUT or ./out)");
    cmd->add_option("--dt", dt_override, "override grid.dt");
    cmd->add_flag("--strict", strict, "enforce every check, overriding config toggles");
  };

  add_common(app.add_subcommand("run", "execute a scenario and write CSV reports"));
  add_common(app.add_subcommand("check", "validate a config without running"));
  add_common(app.add_subcommand("cross", "textbook-picture equivalence check"));
  CLI::App* bench = app.add_subcommand("bench", "metric-route economy benchmark");
  add_common(bench);
  bench->add_option("--dims", dims, "dimensions to benchmark")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  nip::RunOverrides ov;
  if (!out_dir.empty()) ov.out_dir = out_dir;
  if (dt_override > 0.0) ov.dt = dt_override;
  ov.strict = strict;

  const std::string mode = app.get_subcommands().front()->get_name();
  try {
    return dispatch(mode, config_path, ov, dims);
  } catch (const nip::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == nip::Errc::config_error ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
