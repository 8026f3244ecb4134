// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "nip/hermitian_oracle.hpp"
#include "nip/runner.hpp"

using namespace nip;

namespace {

int failures = 0;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

void criterion(int number, const std::string& label, double runtime_limit_s,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  const double t0 = now_seconds();
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
    ok = false;
  }
  const double elapsed = now_seconds() - t0;
  if (runtime_limit_s > 0.0 && elapsed >= runtime_limit_s) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("runtime limit exceeded");
  }
  if (!ok) ++failures;
  std::printf("%s criterion %2d: %s (%.2fs%s%s)\n", ok ? "PASS" : "FAIL", number, label.c_str(),
              elapsed, detail.empty() ? "" : "; ", detail.c_str());
  std::fflush(stdout);
}

std::filesystem::path config_dir() { return NIPLAB_CONFIG_DIR; }

std::filesystem::path out_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "niplab_acceptance";
  std::filesystem::create_directories(dir);
  return dir;
}

double summary_value(const RunReport& rep, const std::string& check) {
  for (const SummaryRow& row : rep.summary)
    if (row.check == check) return row.value;
  throw Error(Errc::config_error, "summary is missing check " + check);
}

std::string fmt_value(const char* name, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s=%.3e", name, v);
  return buf;
}

LatticeModel lattice_16_driven(double mu0, double mu1) {
  MassSpec mass;
  mass.mu0 = mu0;
  mass.mu1 = mu1;
  mass.nu = 1.0;
  return make_lattice(16, 0.5, mass);
}

}  // namespace

int main() {
  const RunOverrides ov{std::nullopt, out_dir(), false};

  // ------------------------------------------------------------------ 1
  criterion(1, "unitarity by compensation on the driven toy", 1.0, [&](std::string& detail) {
    const PreparedScenario sc = load_scenario(config_dir() / "toy2x2_driven.json");
    const RunReport rep = run_scenario(sc, ov);
    const double drift = summary_value(rep, "overlap_drift");
    detail = fmt_value("relative_drift", drift);
    return rep.exit_status == 0 && drift <= 1e-9;
  });

  // ------------------------------------------------------------------ 2
  criterion(2, "basis-reconstructed metric satisfies the generator flow", 5.0, [&](std::string& detail) {
    const PreparedScenario sc = load_scenario(config_dir() / "toy2x2_driven.json");
    const RunReport coarse = run_scenario(sc, ov);
    RunOverrides fine_ov = ov;
    fine_ov.dt = 5e-4;
    const RunReport fine = run_scenario(sc, fine_ov);
    const double r1 = summary_value(coarse, "flow_g");
    const double r2 = summary_value(fine, "flow_g");
    const double ratio = r1 / r2;
    detail = fmt_value("residual", r1) + ", " + fmt_value("halving_ratio", ratio);
    return r1 <= 1e-6 && ratio >= 14.0 && ratio <= 18.0;
  });

  // ------------------------------------------------------------------ 3
  criterion(3, "reconstructed G + Sigma equals the spectral Hamiltonian", 5.0,
            [&](std::string& detail) {
              const PreparedScenario sc = load_scenario(config_dir() / "toy2x2_driven.json");
              const TimeGrid grid = sc.grid;
              PipelineOptions opt;
              opt.energies = sc.energies;
              opt.q0 = sc.q0;
              opt.psi0 = sc.psi0;
              opt.psi_theta0 = sc.psi_theta0;
              opt.gauge = sc.gauge;
              const PipelineResult run = nip_pipeline(sc.g_fn, sc.basis0, grid, opt);
              double worst_flow = 0.0, worst_fact = 0.0;
              for (const PipelineSample& s : run.samples) {
                worst_flow = std::max(worst_flow, s.htilde_resid);
                worst_fact = std::max(worst_fact, s.sigma_gauge_dev);
              }
              detail = fmt_value("omega_flow_gauge", worst_flow) + ", " +
                       fmt_value("refactorized_gauge", worst_fact);
              return worst_flow <= 1e-6 && worst_fact <= 1e-6;
            });

  // ------------------------------------------------------------------ 4
  criterion(4, "textbook and working-space predictions coincide", 2.0, [&](std::string& detail) {
    const PreparedScenario sc = load_scenario(config_dir() / "cross_dilation.json");
    const RunReport rep = cross_check_scenario(sc, ov);
    const double dev = summary_value(rep, "cross_deviation");
    detail = fmt_value("max_deviation", dev);
    return rep.exit_status == 0 && dev <= 1e-7;
  });

  // ------------------------------------------------------------------ 5
  criterion(5, "operator-ODE and basis routes agree; timings reported", 30.0,
            [&](std::string& detail) {
              const PreparedScenario sc = load_scenario(config_dir() / "bench_kg.json");
              const BenchReport rep = benchmark_metric_routes(sc, {2, 4, 8, 16}, ov);
              print_bench(rep, std::cout);
              double worst = 0.0;
              for (const BenchRow& row : rep.rows) worst = std::max(worst, row.max_deviation);
              detail = fmt_value("max_route_deviation", worst);
              return rep.exit_status == 0 && worst <= 1e-6;
            });

  // ------------------------------------------------------------------ 6
  criterion(6, "stationary lattice metric Hermitizes the FV generator", 1.0,
            [&](std::string& detail) {
              MassSpec mass;
              mass.mu0 = 1.0;
              const LatticeModel model = make_lattice(16, 0.5, mass);
              const Operator d = build_lattice_d(model, 0.0);
              const Operator theta = stationary_kg_metric(d);
              const Operator h_fv = build_fv_generator(d);
              const double resid = check_quasi_hermiticity(h_fv, theta);

              const HermitianEig d_eig = hermitian_eig(d);
              std::vector<double> expected;
              for (Eigen::Index k = 0; k < 16; ++k) {
                expected.push_back(-std::sqrt(d_eig.eigenvalues[k]));
                expected.push_back(std::sqrt(d_eig.eigenvalues[k]));
              }
              std::sort(expected.begin(), expected.end());
              const BiorthogonalEig fv = biorthogonal_eig(h_fv);
              double worst_eig = 0.0;
              for (Eigen::Index k = 0; k < 32; ++k)
                worst_eig = std::max(
                    worst_eig,
                    std::abs(fv.eigenvalues[k] - expected[static_cast<size_t>(k)]));
              detail = fmt_value("qh_residual", resid) + ", " +
                       fmt_value("eig_deviation", worst_eig);
              return resid <= 1e-12 && worst_eig <= 1e-9;
            });

  // ------------------------------------------------------------------ 7
  criterion(7, "FV propagation solves the second-order lattice equation", 10.0,
            [&](std::string& detail) {
              const LatticeModel model = lattice_16_driven(1.0, 0.05);
              GeneratorFunction g;
              g.dim = 32;
              g.eval = [model](double t) -> Operator {
                return build_fv_generator(build_lattice_d(model, t));
              };
              const FvState mode = kg_plane_wave_mode(model, 1, 0.0);
              TimeGrid grid{0.0, 2.0, 1e-3, 10};
              const auto traj = propagate_ket(g, fv_to_vector(mode), grid);

              auto residual_at = [&](size_t every) {
                std::vector<double> times;
                std::vector<Eigen::VectorXcd> lower;
                for (size_t i = 0; i < traj.samples.size(); i += every) {
                  times.push_back(traj.times[i]);
                  lower.push_back(traj.samples[i].tail(16));
                }
                return kg_residual(times, lower, model);
              };
              const double r4 = residual_at(4);  // delta = 4e-2
              const double r2 = residual_at(2);  // delta = 2e-2
              const double r1 = residual_at(1);  // delta = 1e-2
              const double ratio_a = r4 / r2;
              const double ratio_b = r2 / r1;
              detail = fmt_value("residual", r1) + ", " + fmt_value("ratio_4to2", ratio_a) +
                       ", " + fmt_value("ratio_2to1", ratio_b);
              return r1 <= 1e-4 && ratio_a >= 3.0 && ratio_a <= 5.0 && ratio_b >= 3.0 &&
                     ratio_b <= 5.0;
            });

  // ------------------------------------------------------------------ 8
  criterion(8, "KG overlap conservation and the transported Dyson map", 30.0,
            [&](std::string& detail) {
              const PreparedScenario sc = load_scenario(config_dir() / "kg_driven.json");
              const RunReport rep = run_scenario(sc, ov);
              const double drift = summary_value(rep, "overlap_drift");
              const double omega_theta = summary_value(rep, "omega_theta");
              detail = fmt_value("overlap_drift", drift) + ", " +
                       fmt_value("omega_theta", omega_theta);
              return drift <= 1e-8 && omega_theta <= 1e-7;
            });

  // ------------------------------------------------------------------ 9
  criterion(9, "isospectral flows and the two Heisenberg forms", 0.0, [&](std::string& detail) {
    const PreparedScenario sc = load_scenario(config_dir() / "toy2x2_driven.json");
    const RunReport rep = run_scenario(sc, ov);
    const double h_drift = summary_value(rep, "h_eig_drift");
    const double q_drift = summary_value(rep, "q_eig_drift");

    const DrivenToy toy = make_driven_toy();
    TimeGrid grid{0.0, 5.0, 1e-3, 10};
    const Operator h0 = toy.h_obs_fn(0.0);
    const auto via_sigma = propagate_observable(toy.sigma_fn, h0, std::nullopt, grid);
    const auto via_g = propagate_observable_gform(toy.g_fn, h0, std::nullopt, grid);
    double form_gap = 0.0;
    for (size_t i = 0; i < via_sigma.samples.size(); ++i)
      form_gap = std::max(form_gap, (via_sigma.samples[i] - via_g.samples[i]).norm());

    detail = fmt_value("h_eig_drift", h_drift) + ", " + fmt_value("q_eig_drift", q_drift) +
             ", " + fmt_value("form_gap", form_gap);
    return h_drift <= 1e-8 && q_drift <= 1e-8 && form_gap <= 1e-8;
  });

  // ------------------------------------------------------------------ 10
  criterion(10, "tachyonic crossing raises MetricDegenerated within one step", 0.0,
            [&](std::string& detail) {
              const LatticeModel model = lattice_16_driven(0.1, 0.5);
              TimeGrid grid{0.0, 5.0, 1e-3, 10};

              // independent dense-eigensolve bisection for the crossing time
              auto min_eig = [&](double t) {
                Eigen::SelfAdjointEigenSolver<Operator> es(build_lattice_d(model, t),
                                                           Eigen::EigenvaluesOnly);
                return es.eigenvalues()[0];
              };
              double probe = 0.0;
              while (probe < 5.0 && min_eig(probe) > 0.0) probe += 1e-3;
              if (probe >= 5.0) {
                detail = "no crossing found by the oracle";
                return false;
              }
              double left = probe - 1e-3, right = probe;
              for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (left + right);
                (min_eig(mid) > 0.0 ? left : right) = mid;
              }
              const double crossing = 0.5 * (left + right);

              try {
                kg_scenario(model, kg_plane_wave_mode(model, 1, 0.0), grid);
                detail = "run completed without degenerating";
                return false;
              } catch (const Error& e) {
                if (e.code() != Errc::metric_degenerated || !e.has_time()) {
                  detail = std::string("unexpected error: ") + e.what();
                  return false;
                }
                detail = fmt_value("reported_t", e.time()) + ", " +
                         fmt_value("oracle_t", crossing);
                return std::abs(e.time() - crossing) <= grid.dt * (1.0 + 1e-9);
              }
            });

  std::printf("%s\n", failures == 0 ? "acceptance: all criteria passed"
                                    : "acceptance: FAILURES present");
  return failures == 0 ? 0 : 1;
}
