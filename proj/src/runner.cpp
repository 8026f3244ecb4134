#include "nip/runner.hpp"

#include "nip/hermitian_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

namespace nip {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : file_(std::fopen(path.c_str(), "wb")) {
    if (!file_) throw Error(Errc::config_error, "cannot open " + path.string() + " for writing");
  }
  ~CsvWriter() {
    if (file_) std::fclose(file_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) std::fputc(',', file_);
      std::fputs(fields[i].c_str(), file_);
    }
    std::fputs("\r\n", file_);
  }

 private:
  std::FILE* file_;
};

double max_or_zero(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v)
    if (!std::isnan(x)) m = std::max(m, x);
  return m;
}

struct RunData {
  PipelineResult pipeline;
  std::vector<double> d_min_eig;   // kg only
  std::vector<double> krein_self;  // kg only
  double kg_res = std::numeric_limits<double>::quiet_NaN();
  bool kg = false;
};

RunData execute(const PreparedScenario& sc, const TimeGrid& grid) {
  RunData data;
  if (sc.is_kg()) {
    KgOptions opt;
    opt.energies = sc.kg_energies_override;
    opt.gauge = sc.gauge;
    opt.tol = sc.tol;
    if (sc.q0.size() > 0) opt.q0 = sc.q0;
    KgRunResult run = kg_scenario(*sc.lattice, *sc.kg_initial, grid, opt);
    data.kg = true;
    data.d_min_eig = std::move(run.d_min_eig);
    data.krein_self = std::move(run.krein_self);
    if (sc.checks.enabled("kg_residual")) data.kg_res = kg_residual(run, *sc.lattice);
    data.pipeline = std::move(run.pipeline);
  } else {
    PipelineOptions opt;
    opt.energies = sc.energies;
    opt.gauge = sc.gauge;
    opt.tol = sc.tol;
    opt.q0 = sc.q0;
    opt.psi0 = sc.psi0;
    opt.psi_theta0 = sc.psi_theta0;
    data.pipeline = nip_pipeline(sc.g_fn, sc.basis0, grid, opt);
  }
  return data;
}

std::vector<SummaryRow> summarize(const RunData& data, const ChecksConfig& checks) {
  const auto& samples = data.pipeline.samples;
  if (samples.empty()) throw Error(Errc::insufficient_samples, "run produced no samples");

  std::vector<std::pair<std::string, double>> values;

  {
    const Complex ov0 = samples.front().overlap;
    double drift = 0.0;
    for (const auto& s : samples) drift = std::max(drift, std::abs(s.overlap - ov0));
    values.emplace_back("overlap_drift",
                        drift / std::max(std::abs(ov0), std::numeric_limits<double>::min()));
  }
  {
    double gram = 0.0, comp = 0.0, qh_h = 0.0, qh_q = 0.0, fg = 0.0, fs = 0.0, ht = 0.0,
           ot = 0.0;
    for (const auto& s : samples) {
      gram = std::max(gram, s.gram_dev);
      comp = std::max(comp, s.completeness_dev);
      qh_h = std::max(qh_h, s.qh_h);
      qh_q = std::max(qh_q, s.qh_q);
      if (!std::isnan(s.flow_g)) fg = std::max(fg, s.flow_g);
      if (!std::isnan(s.flow_sigma)) fs = std::max(fs, s.flow_sigma);
      if (!std::isnan(s.htilde_resid)) ht = std::max(ht, s.htilde_resid);
      ot = std::max(ot, s.omega_theta_resid);
    }
    values.emplace_back("gram_dev", gram);
    values.emplace_back("completeness_dev", comp);
    values.emplace_back("qh_h", qh_h);
    values.emplace_back("qh_q", qh_q);
    values.emplace_back("h_eig_drift", [&] {
      double d = 0.0;
      for (const auto& s : samples)
        d = std::max(d, (s.h_eigs - samples.front().h_eigs).cwiseAbs().maxCoeff());
      return d;
    }());
    if (samples.front().q_eigs.size() > 0)
      values.emplace_back("q_eig_drift", [&] {
        double d = 0.0;
        for (const auto& s : samples)
          d = std::max(d, (s.q_eigs - samples.front().q_eigs).cwiseAbs().maxCoeff());
        return d;
      }());
    values.emplace_back("flow_g", fg);
    values.emplace_back("flow_sigma", fs);
    values.emplace_back("htilde", ht);
    values.emplace_back("omega_theta", ot);
  }
  if (data.kg) {
    const double k0 = data.krein_self.front();
    double drift = 0.0;
    for (double k : data.krein_self) drift = std::max(drift, std::abs(k - k0));
    values.emplace_back("krein_drift", drift / std::max(std::abs(k0), 1.0));
    if (!std::isnan(data.kg_res)) values.emplace_back("kg_residual", data.kg_res);
  }

  std::vector<SummaryRow> rows;
  for (const auto& [name, value] : values) {
    if (!checks.enabled(name)) continue;
    SummaryRow row;
    row.check = name;
    row.value = value;
    row.tol = checks.tol(name);
    row.pass = value <= row.tol;
    rows.push_back(row);
  }
  return rows;
}

void write_run_csv(const std::filesystem::path& path, const RunData& data) {
  const auto& samples = data.pipeline.samples;
  const Eigen::Index dim = data.pipeline.dim;

  CsvWriter csv(path);
  std::vector<std::string> header = {
      "t",     "expect_raw_re", "expect_raw_im",     "expect_norm_re",    "expect_norm_im",
      "overlap_re", "overlap_im", "gram_dev",         "completeness_dev",
      "qh_resid_h", "qh_resid_q", "flow_resid_sigma", "flow_resid_g",
      "htilde_resid", "omega_theta_resid", "theta_min_eig"};
  for (Eigen::Index k = 0; k < dim; ++k) {
    header.push_back("h_eig_" + std::to_string(k) + "_re");
    header.push_back("h_eig_" + std::to_string(k) + "_im");
  }
  if (data.kg) {
    header.push_back("d_min_eig");
    header.push_back("krein_norm");
  }
  csv.row(header);

  for (size_t i = 0; i < samples.size(); ++i) {
    const PipelineSample& s = samples[i];
    std::vector<std::string> row = {
        fmt(s.t),
        fmt(s.expect_raw.real()),
        fmt(s.expect_raw.imag()),
        fmt(s.expect_norm.real()),
        fmt(s.expect_norm.imag()),
        fmt(s.overlap.real()),
        fmt(s.overlap.imag()),
        fmt(s.gram_dev),
        fmt(s.completeness_dev),
        fmt(s.qh_h),
        fmt(s.qh_q),
        fmt(s.flow_sigma),
        fmt(s.flow_g),
        fmt(s.htilde_resid),
        fmt(s.omega_theta_resid),
        fmt(s.theta_min_eig)};
    for (Eigen::Index k = 0; k < dim; ++k) {
      row.push_back(fmt(s.h_eigs[k].real()));
      row.push_back(fmt(s.h_eigs[k].imag()));
    }
    if (data.kg) {
      row.push_back(fmt(data.d_min_eig[i]));
      row.push_back(fmt(data.krein_self[i]));
    }
    csv.row(row);
  }
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  CsvWriter csv(path);
  csv.row({"check", "value", "tolerance", "status"});
  for (const SummaryRow& r : rows)
    csv.row({r.check, fmt(r.value), fmt(r.tol), r.pass ? "pass" : "fail"});
}

std::filesystem::path resolve_out_dir(const PreparedScenario& sc, const RunOverrides& ov) {
  std::filesystem::path dir;
  if (ov.out_dir)
    dir = *ov.out_dir;
  else if (!sc.out_dir_hint.empty())
    dir = sc.out_dir_hint;
  else
    dir = default_out_dir();
  std::filesystem::create_directories(dir);
  return dir;
}

TimeGrid grid_with_overrides(const PreparedScenario& sc, const RunOverrides& ov) {
  TimeGrid grid = sc.grid;
  if (ov.dt) {
    grid.dt = *ov.dt;
    grid.validate();
  }
  return grid;
}

}  // namespace

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("NIPLAB_OUT")) return env;
  return "out";
}

RunReport run_scenario(const PreparedScenario& sc, const RunOverrides& ov) {
  const TimeGrid grid = grid_with_overrides(sc, ov);
  ChecksConfig checks = sc.checks;
  if (ov.strict) checks.enable_all();
  checks.items["cross_deviation"].enabled = false;  // belongs to the cross mode

  RunData data = execute(sc, grid);

  RunReport report;
  report.scenario = sc.name;
  report.summary = summarize(data, checks);
  for (const SummaryRow& row : report.summary)
    if (!row.pass) report.exit_status = 1;

  const std::filesystem::path dir = resolve_out_dir(sc, ov);
  report.csv_path = dir / (sc.name + ".csv");
  report.summary_path = dir / (sc.name + "_summary.csv");
  write_run_csv(report.csv_path, data);
  write_summary_csv(report.summary_path, report.summary);
  return report;
}

RunReport cross_check_scenario(const PreparedScenario& sc, const RunOverrides& ov) {
  if (!sc.cross)
    throw Error(Errc::config_error, "cross: section missing from config");
  const TimeGrid grid = grid_with_overrides(sc, ov);

  const double deviation = cross_picture_check(sc.cross->omega_fn, sc.cross->h_fn,
                                               sc.cross->psi_T0, sc.cross->q_T, grid, sc.tol);

  SummaryRow row;
  row.check = "cross_deviation";
  row.value = deviation;
  row.tol = sc.checks.tol("cross_deviation");
  row.pass = deviation <= row.tol;

  RunReport report;
  report.scenario = sc.name + "_cross";
  report.summary = {row};
  report.exit_status = row.pass ? 0 : 1;

  const std::filesystem::path dir = resolve_out_dir(sc, ov);
  report.summary_path = dir / (report.scenario + "_summary.csv");
  write_summary_csv(report.summary_path, report.summary);
  return report;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

namespace {

struct ScaledProblem {
  GeneratorFunction g_fn;
  BiorthogonalBasis basis0;
};

ScaledProblem scale_problem(const PreparedScenario& sc, Eigen::Index dim,
                            const Tolerances& tol) {
  ScaledProblem p;
  if (sc.is_kg()) {
    if (dim % 2 != 0)
      throw Error(Errc::config_error, "bench: kg dimensions must be even (dim = 2 n_sites)");
    LatticeModel model = *sc.lattice;
    model.n_sites = dim / 2;
    p.g_fn.dim = dim;
    p.g_fn.eval = [model](double t) -> Operator {
      return build_fv_generator(build_lattice_d(model, t));
    };
    const BiorthogonalEig eig = biorthogonal_eig(p.g_fn(sc.grid.t_start), tol);
    p.basis0 = BiorthogonalBasis{eig.right_kets, eig.left_bras};
  } else {
    const Eigen::Index base = sc.g_fn.dim;
    if (dim % base != 0)
      throw Error(Errc::config_error, "bench: dimension must be a multiple of the toy size");
    const Eigen::Index copies = dim / base;
    p.g_fn.dim = dim;
    p.g_fn.eval = [base, copies, g = sc.g_fn.eval](double t) -> Operator {
      const Operator block = g(t);
      Operator big = Operator::Zero(base * copies, base * copies);
      for (Eigen::Index k = 0; k < copies; ++k)
        big.block(k * base, k * base, base, base) = block;
      return big;
    };
    p.basis0.kets = Eigen::MatrixXcd::Zero(dim, dim);
    p.basis0.bras = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index k = 0; k < copies; ++k) {
      p.basis0.kets.block(k * base, k * base, base, base) = sc.basis0.kets;
      p.basis0.bras.block(k * base, k * base, base, base) = sc.basis0.bras;
    }
  }
  return p;
}

}  // namespace

BenchReport benchmark_metric_routes(const PreparedScenario& sc,
                                    const std::vector<Eigen::Index>& dims,
                                    const RunOverrides& ov) {
  constexpr double kGate = 1e-6;
  const TimeGrid grid = grid_with_overrides(sc, ov);
  const long steps = grid.n_steps();

  BenchReport report;
  report.scenario = sc.name;

  using clock = std::chrono::steady_clock;
  for (Eigen::Index dim : dims) {
    ScaledProblem p = scale_problem(sc, dim, sc.tol);
    const Operator theta0 = metric_from_basis(Eigen::MatrixXcd(p.basis0.bras), sc.tol);

    const auto t0 = clock::now();
    const Trajectory<Operator> ode = solve_metric_ode(p.g_fn, theta0, grid, sc.tol);
    const auto t1 = clock::now();
    const Trajectory<BiorthogonalBasis> basis = propagate_basis(p.g_fn, p.basis0, grid, sc.tol);
    std::vector<Operator> rebuilt;
    rebuilt.reserve(basis.samples.size());
    for (const auto& b : basis.samples)
      rebuilt.push_back(metric_from_basis(Eigen::MatrixXcd(b.bras), sc.tol));
    const auto t2 = clock::now();

    double deviation = 0.0;
    for (size_t i = 0; i < rebuilt.size(); ++i)
      deviation =
          std::max(deviation, (ode.samples[i] - rebuilt[i]).norm() / rebuilt[i].norm());

    const double ms_ode = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double ms_basis = std::chrono::duration<double, std::milli>(t2 - t1).count();
    const bool valid = deviation <= kGate;
    if (!valid) report.exit_status = 1;

    report.rows.push_back({dim, "operator_ode", ms_ode,
                           ms_ode * 1000.0 / static_cast<double>(steps), deviation, valid});
    report.rows.push_back({dim, "basis_vectors", ms_basis,
                           ms_basis * 1000.0 / static_cast<double>(steps), deviation, valid});
  }

  const std::filesystem::path dir = resolve_out_dir(sc, ov);
  report.csv_path = dir / (sc.name + "_bench.csv");
  CsvWriter csv(report.csv_path);
  csv.row({"dim", "route", "wall_ms", "per_step_us", "max_deviation", "valid"});
  for (const BenchRow& r : report.rows)
    csv.row({std::to_string(r.dim), r.route, fmt(r.wall_ms), fmt(r.per_step_us),
             fmt(r.max_deviation), r.valid ? "true" : "false"});
  return report;
}

void print_report(const RunReport& rep, std::ostream& os) {
  os << "scenario: " << rep.scenario << "\n";
  for (const SummaryRow& r : rep.summary) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-18s %12.5e  (tol %8.1e)  %s", r.check.c_str(), r.value,
                  r.tol, r.pass ? "pass" : "FAIL");
    os << buf << "\n";
  }
  os << "exit status: " << rep.exit_status << "\n";
}

void print_bench(const BenchReport& rep, std::ostream& os) {
  os << "benchmark: " << rep.scenario << "\n";
  os << "  dim  route           wall_ms     per_step_us   max_deviation  valid\n";
  for (const BenchRow& r : rep.rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %4ld %-14s %10.3f %14.3f %15.3e  %s",
                  static_cast<long>(r.dim), r.route.c_str(), r.wall_ms, r.per_step_us,
                  r.max_deviation, r.valid ? "yes" : "NO");
    os << buf << "\n";
  }
  os << "exit status: " << rep.exit_status << "\n";
}

}  // namespace nip
