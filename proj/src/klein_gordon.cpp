#include "nip/klein_gordon.hpp"

#include <cmath>

namespace nip {

namespace {

double d_smallest_eigenvalue(const Operator& d) {
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error(Errc::convergence_failure, "kg: lattice eigensolver failed");
  return es.eigenvalues()[0];
}

}  // namespace

KreinStructure make_krein(Eigen::Index n_sites) {
  const Eigen::Index n = n_sites;
  Operator p = Operator::Zero(2 * n, 2 * n);
  p.topRightCorner(n, n) = Operator::Identity(n, n);
  p.bottomLeftCorner(n, n) = Operator::Identity(n, n);
  return KreinStructure{std::move(p)};
}

Operator build_lattice_d(const LatticeModel& model, double t) {
  if (model.n_sites < 1) throw Error(Errc::config_error, "lattice: n_sites must be >= 1");
  if (!(model.dx > 0.0)) throw Error(Errc::config_error, "lattice: dx must be positive");
  if (!model.mass_sq_fn) throw Error(Errc::config_error, "lattice: mass_sq_fn not set");
  const Eigen::Index n = model.n_sites;
  const double inv_dx2 = 1.0 / (model.dx * model.dx);
  Operator d = Operator::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = 2.0 * inv_dx2 + model.mass_sq_fn(j, t);
    if (j + 1 < n) {
      d(j, j + 1) = -inv_dx2;
      d(j + 1, j) = -inv_dx2;
    }
  }
  return d;
}

Operator build_fv_generator(const Operator& d) {
  require_square(d, "build_fv_generator");
  const Eigen::Index n = d.rows();
  Operator g = Operator::Zero(2 * n, 2 * n);
  g.topRightCorner(n, n) = d;
  g.bottomLeftCorner(n, n) = Operator::Identity(n, n);
  return g;
}

Operator build_fv_bra_generator(const Operator& d) {
  require_square(d, "build_fv_bra_generator");
  const Eigen::Index n = d.rows();
  Operator g = Operator::Zero(2 * n, 2 * n);
  g.topRightCorner(n, n) = Operator::Identity(n, n);
  g.bottomLeftCorner(n, n) = d.conjugate();
  return g;
}

Operator stationary_kg_metric(const Operator& d, const Tolerances& tol) {
  const Operator root = positive_sqrt(d, tol);
  const Eigen::Index n = d.rows();
  Operator theta = Operator::Zero(2 * n, 2 * n);
  theta.topLeftCorner(n, n) = inverse(root, tol);
  theta.bottomRightCorner(n, n) = root;
  return theta;
}

FvState fv_pack(const Eigen::VectorXcd& psi, const Eigen::VectorXcd& dpsi_dt) {
  if (psi.size() != dpsi_dt.size())
    throw Error(Errc::dimension_mismatch, "fv_pack: component lengths disagree");
  return FvState{imag_unit * dpsi_dt, psi};
}

void fv_unpack(const FvState& state, Eigen::VectorXcd& psi, Eigen::VectorXcd& dpsi_dt) {
  if (state.upper.size() != state.lower.size())
    throw Error(Errc::dimension_mismatch, "fv_unpack: component lengths disagree");
  psi = state.lower;
  dpsi_dt = -imag_unit * state.upper;
}

Eigen::VectorXcd fv_to_vector(const FvState& state) {
  Eigen::VectorXcd v(state.upper.size() + state.lower.size());
  v << state.upper, state.lower;
  return v;
}

FvState fv_from_vector(const Eigen::VectorXcd& v) {
  if (v.size() % 2 != 0) throw Error(Errc::dimension_mismatch, "fv_from_vector: odd length");
  const Eigen::Index n = v.size() / 2;
  return FvState{v.head(n), v.tail(n)};
}

Complex krein_product(const KreinStructure& k, const FvState& a, const FvState& b) {
  const Eigen::Index n = a.upper.size();
  if (b.upper.size() != n || a.lower.size() != n || b.lower.size() != n ||
      k.p_matrix.rows() != 2 * n)
    throw Error(Errc::dimension_mismatch, "krein_product: dims disagree");
  return fv_to_vector(a).adjoint() * k.p_matrix * fv_to_vector(b);
}

FvState kg_plane_wave_mode(const LatticeModel& model, int k_index, double t) {
  if (k_index < 1 || k_index > model.n_sites)
    throw Error(Errc::config_error, "kg mode index out of range");
  const Eigen::Index n = model.n_sites;
  const double k_wave = M_PI * static_cast<double>(k_index) /
                        ((static_cast<double>(n) + 1.0) * model.dx);
  // Dispersion of the 3-point stencil; exact for site-independent mass.
  const Complex m2 = model.mass_sq_fn(0, t);
  const Complex omega2 =
      (2.0 - 2.0 * std::cos(k_wave * model.dx)) / (model.dx * model.dx) + m2;
  const Complex omega = std::sqrt(omega2);
  Eigen::VectorXcd psi(n), dpsi(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    psi[j] = std::sin(k_wave * model.site_x(j));
    dpsi[j] = -imag_unit * omega * psi[j];
  }
  return fv_pack(psi, dpsi);
}

KgRunResult kg_scenario(const LatticeModel& model, const FvState& initial, const TimeGrid& grid,
                        const KgOptions& options) {
  grid.validate();
  const Eigen::Index n = model.n_sites;
  if (initial.upper.size() != n || initial.lower.size() != n)
    throw Error(Errc::dimension_mismatch, "kg_scenario: initial state does not match lattice");

  GeneratorFunction g_fn;
  g_fn.dim = 2 * n;
  g_fn.eval = [model](double t) -> Operator {
    return build_fv_generator(build_lattice_d(model, t));
  };

  const Operator d0 = build_lattice_d(model, grid.t_start);
  {
    const double min0 = d_smallest_eigenvalue(d0);
    if (min0 <= options.tol.pd_rel * d0.norm())
      throw Error(Errc::metric_degenerated,
                  "kg_scenario: initial mass profile is tachyonic (min eigenvalue of D = " +
                      std::to_string(min0) + ")",
                  grid.t_start);
  }

  const BiorthogonalEig eig = biorthogonal_eig(g_fn(grid.t_start), options.tol);
  BiorthogonalBasis basis0{eig.right_kets, eig.left_bras};

  RealVector energies;
  if (options.energies) {
    energies = *options.energies;
  } else {
    const double imag_norm = eig.eigenvalues.imag().norm();
    if (imag_norm > options.tol.herm_rel * std::max(1.0, eig.eigenvalues.norm()))
      throw Error(Errc::config_error,
                  "kg_scenario: complex instantaneous spectrum; supply energies explicitly");
    energies = eig.eigenvalues.real();
  }

  PipelineOptions opt;
  opt.energies = energies;
  opt.gauge = options.gauge;
  opt.tol = options.tol;
  opt.store_operators = options.store_operators;
  opt.psi0 = fv_to_vector(initial);
  opt.psi_theta0 = metric_from_basis(Eigen::MatrixXcd(basis0.bras), options.tol) * opt.psi0;
  opt.q0 = options.q0.size() > 0
               ? options.q0
               : hamiltonian_from_spectral(SpectralHamiltonian{basis0, energies});
  opt.step_monitor = [model, tol = options.tol](double t) {
    const Operator d = build_lattice_d(model, t);
    const double min_eig = d_smallest_eigenvalue(d);
    if (min_eig <= tol.pd_rel * d.norm())
      throw Error(Errc::metric_degenerated,
                  "kg_scenario: a lattice mode turned tachyonic (min eigenvalue of D = " +
                      std::to_string(min_eig) + ")",
                  t);
  };

  KgRunResult run;
  run.pipeline = nip_pipeline(g_fn, basis0, grid, opt);

  const KreinStructure krein = make_krein(n);
  run.d_min_eig.reserve(run.pipeline.samples.size());
  run.krein_self.reserve(run.pipeline.samples.size());
  for (const PipelineSample& s : run.pipeline.samples) {
    run.d_min_eig.push_back(d_smallest_eigenvalue(build_lattice_d(model, s.t)));
    const FvState fv = fv_from_vector(s.psi);
    run.krein_self.push_back(krein_product(krein, fv, fv).real());
  }
  return run;
}

double kg_residual(const std::vector<double>& times,
                   const std::vector<Eigen::VectorXcd>& psi_lower, const LatticeModel& model) {
  if (times.size() != psi_lower.size())
    throw Error(Errc::dimension_mismatch, "kg_residual: times/samples disagree");
  if (times.size() < 5)
    throw Error(Errc::insufficient_samples, "kg_residual: need at least 5 samples");
  const double delta = times[1] - times[0];
  for (size_t i = 1; i < times.size(); ++i)
    if (std::abs(times[i] - times[i - 1] - delta) > 1e-9 * std::max(1.0, std::abs(times[i])))
      throw Error(Errc::insufficient_samples, "kg_residual: samples are not uniformly spaced");

  double worst = 0.0;
  bool any_signal = false;
  for (size_t i = 1; i + 1 < times.size(); ++i) {
    const Eigen::VectorXcd second_deriv =
        (psi_lower[i + 1] - 2.0 * psi_lower[i] + psi_lower[i - 1]) / (delta * delta);
    const Eigen::VectorXcd dpsi = build_lattice_d(model, times[i]) * psi_lower[i];
    const double den = dpsi.norm();
    if (den == 0.0) continue;  // zero data contributes zero by convention
    any_signal = true;
    worst = std::max(worst, (second_deriv + dpsi).norm() / den);
  }
  return any_signal ? worst : 0.0;
}

double kg_residual(const KgRunResult& run, const LatticeModel& model) {
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> lower;
  times.reserve(run.pipeline.samples.size());
  lower.reserve(run.pipeline.samples.size());
  for (const PipelineSample& s : run.pipeline.samples) {
    times.push_back(s.t);
    lower.push_back(fv_from_vector(s.psi).lower);
  }
  return kg_residual(times, lower, model);
}

}  // namespace nip
