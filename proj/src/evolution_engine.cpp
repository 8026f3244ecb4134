#include "nip/evolution_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nip {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One classic RK4 step. The three generator evaluations of the step are
// precomputed by the caller so that the two middle stages share one.
template <class Y, class Rhs>
Y rk4_step(const Rhs& rhs, const Y& y, double t, double dt) {
  const Y k1 = rhs(0, t, y);
  const Y k2 = rhs(1, t + 0.5 * dt, Y(y + (0.5 * dt) * k1));
  const Y k3 = rhs(1, t + 0.5 * dt, Y(y + (0.5 * dt) * k2));
  const Y k4 = rhs(2, t + dt, Y(y + dt * k3));
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct StageOps {
  Operator g0, gm, g1;
  void fill(const GeneratorFunction& fn, double t, double dt) {
    g0 = fn(t);
    gm = fn(t + 0.5 * dt);
    g1 = fn(t + dt);
  }
  const Operator& at(int stage) const { return stage == 0 ? g0 : (stage == 1 ? gm : g1); }
};

Eigen::VectorXcd sorted_eigenvalues(const Operator& m) {
  Eigen::ComplexEigenSolver<Operator> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw Error(Errc::convergence_failure, "sorted_eigenvalues: eigensolver failed");
  Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<size_t>(ev.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (ev[a].real() != ev[b].real()) return ev[a].real() < ev[b].real();
    return ev[a].imag() < ev[b].imag();
  });
  Eigen::VectorXcd out(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) out[i] = ev[order[i]];
  return out;
}

double smallest_hermitian_eigenvalue(const Operator& m) {
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error(Errc::convergence_failure, "pipeline: metric eigensolver failed");
  return es.eigenvalues()[0];
}

template <class VecLike>
void check_finite(const VecLike& v, const char* who, double t) {
  if (!v.allFinite()) throw Error(Errc::non_finite_state, who, t);
}

}  // namespace

DensityMatrix make_pure_density(const StateVector& psi, const DualStateVector& psi_theta) {
  if (psi.size() != psi_theta.size())
    throw Error(Errc::dimension_mismatch, "make_pure_density: vector lengths disagree");
  const Complex denom = psi_theta.adjoint() * psi;
  if (std::abs(denom) == 0.0)
    throw Error(Errc::rank_deficient, "make_pure_density: <psi_theta|psi> vanishes");
  return DensityMatrix{psi * psi_theta.adjoint() / denom};
}

Trajectory<StateVector> propagate_ket(const GeneratorFunction& g_fn, const StateVector& psi0,
                                      const TimeGrid& grid) {
  grid.validate();
  if (psi0.size() != g_fn.dim)
    throw Error(Errc::dimension_mismatch, "propagate_ket: state/generator dims disagree");

  Trajectory<StateVector> traj;
  traj.grid = grid;
  StateVector psi = psi0;
  StageOps ops;
  const long steps = grid.n_steps();
  for (long k = 0; k <= steps; ++k) {
    const double t = grid.time_at(k);
    if (k % grid.sample_stride == 0) {
      check_finite(psi, "propagate_ket: state diverged", t);
      traj.times.push_back(t);
      traj.samples.push_back(psi);
    }
    if (k == steps) break;
    ops.fill(g_fn, t, grid.dt);
    psi = rk4_step(
        [&](int stage, double, const StateVector& y) -> StateVector {
          return -imag_unit * (ops.at(stage) * y);
        },
        psi, t, grid.dt);
  }
  return traj;
}

Trajectory<DualStateVector> propagate_bra(const GeneratorFunction& g_fn,
                                          const DualStateVector& psi_theta0,
                                          const TimeGrid& grid) {
  GeneratorFunction adj;
  adj.dim = g_fn.dim;
  adj.eval = [g_fn](double t) -> Operator { return g_fn(t).adjoint(); };
  if (g_fn.has_derivative())
    adj.derivative = [g_fn](double t) -> Operator { return g_fn.derivative(t).adjoint(); };
  return propagate_ket(adj, psi_theta0, grid);
}

namespace {

Trajectory<Operator> propagate_commutator_flow(const GeneratorFunction& a_fn, const Operator& q0,
                                               const std::optional<GeneratorFunction>& k_fn,
                                               const TimeGrid& grid, bool sigma_form,
                                               const char* who) {
  grid.validate();
  require_square(q0, who);
  if (q0.rows() != a_fn.dim) throw Error(Errc::dimension_mismatch, std::string(who) + ": dims disagree");
  if (k_fn && k_fn->dim != a_fn.dim)
    throw Error(Errc::dimension_mismatch, std::string(who) + ": source term dim disagrees");

  Trajectory<Operator> traj;
  traj.grid = grid;
  Operator q = q0;
  StageOps a_ops, k_ops;
  const long steps = grid.n_steps();
  for (long k = 0; k <= steps; ++k) {
    const double t = grid.time_at(k);
    if (k % grid.sample_stride == 0) {
      check_finite(q, (std::string(who) + ": flow diverged").c_str(), t);
      traj.times.push_back(t);
      traj.samples.push_back(q);
      const Eigen::VectorXcd eigs = sorted_eigenvalues(q);
      for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        traj.logs["q_eig_" + std::to_string(i) + "_re"].push_back(eigs[i].real());
        traj.logs["q_eig_" + std::to_string(i) + "_im"].push_back(eigs[i].imag());
      }
    }
    if (k == steps) break;
    a_ops.fill(a_fn, t, grid.dt);
    if (k_fn) k_ops.fill(*k_fn, t, grid.dt);
    q = rk4_step(
        [&](int stage, double, const Operator& y) -> Operator {
          const Operator& a = a_ops.at(stage);
          Operator rhs = sigma_form ? Operator(y * a - a * y) : Operator(a * y - y * a);
          if (k_fn) rhs += k_ops.at(stage);
          return Operator(-imag_unit * rhs);
        },
        q, t, grid.dt);
  }
  return traj;
}

}  // namespace

Trajectory<Operator> propagate_observable(const GeneratorFunction& sigma_fn, const Operator& q0,
                                          const std::optional<GeneratorFunction>& k_fn,
                                          const TimeGrid& grid) {
  return propagate_commutator_flow(sigma_fn, q0, k_fn, grid, /*sigma_form=*/true,
                                   "propagate_observable");
}

Trajectory<Operator> propagate_observable_gform(const GeneratorFunction& g_fn, const Operator& q0,
                                                const std::optional<GeneratorFunction>& k_fn,
                                                const TimeGrid& grid) {
  return propagate_commutator_flow(g_fn, q0, k_fn, grid, /*sigma_form=*/false,
                                   "propagate_observable_gform");
}

Trajectory<DensityMatrix> propagate_density(const GeneratorFunction& g_fn,
                                            const DensityMatrix& rho0, const TimeGrid& grid) {
  grid.validate();
  require_square(rho0.matrix, "propagate_density");
  if (rho0.matrix.rows() != g_fn.dim)
    throw Error(Errc::dimension_mismatch, "propagate_density: dims disagree");
  const Complex tr0 = rho0.matrix.trace();
  if (std::abs(tr0 - Complex(1.0, 0.0)) > 1e-8)
    throw Error(Errc::config_error, "propagate_density: initial trace must be 1");

  Trajectory<DensityMatrix> traj;
  traj.grid = grid;
  auto& trace_log = traj.logs["trace_dev"];
  Operator rho = rho0.matrix;
  StageOps ops;
  const long steps = grid.n_steps();
  for (long k = 0; k <= steps; ++k) {
    const double t = grid.time_at(k);
    if (k % grid.sample_stride == 0) {
      check_finite(rho, "propagate_density: flow diverged", t);
      traj.times.push_back(t);
      traj.samples.push_back(DensityMatrix{rho});
      trace_log.push_back(std::abs(rho.trace() - Complex(1.0, 0.0)));
    }
    if (k == steps) break;
    ops.fill(g_fn, t, grid.dt);
    rho = rk4_step(
        [&](int stage, double, const Operator& y) -> Operator {
          const Operator& g = ops.at(stage);
          return Operator(-imag_unit * (g * y - y * g));
        },
        rho, t, grid.dt);
  }
  return traj;
}

Trajectory<BiorthogonalBasis> propagate_basis(const GeneratorFunction& g_fn,
                                              const BiorthogonalBasis& basis0,
                                              const TimeGrid& grid, const Tolerances& tol) {
  grid.validate();
  if (basis0.kets.rows() != g_fn.dim || basis0.bras.rows() != g_fn.dim ||
      basis0.kets.cols() != basis0.bras.cols())
    throw Error(Errc::dimension_mismatch, "propagate_basis: basis/generator shapes disagree");
  const Eigen::Index n = basis0.size();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd idd = Eigen::MatrixXcd::Identity(g_fn.dim, g_fn.dim);

  Trajectory<BiorthogonalBasis> traj;
  traj.grid = grid;
  auto& gram_log = traj.logs["gram_dev"];
  auto& comp_log = traj.logs["completeness_dev"];

  Eigen::MatrixXcd kets = basis0.kets;
  Eigen::MatrixXcd bras = basis0.bras;
  StageOps ops;
  const long steps = grid.n_steps();
  for (long k = 0; k <= steps; ++k) {
    const double t = grid.time_at(k);
    if (k % grid.sample_stride == 0) {
      check_finite(kets, "propagate_basis: kets diverged", t);
      check_finite(bras, "propagate_basis: bras diverged", t);
      const double gram_dev = (bras.adjoint() * kets - id).norm();
      const double comp_dev =
          (basis0.size() == g_fn.dim) ? (kets * bras.adjoint() - idd).norm() : kNaN;
      if (gram_dev > tol.basis_dev || (comp_dev == comp_dev && comp_dev > tol.basis_dev))
        throw Error(Errc::basis_degenerated,
                    "propagate_basis: deviation " + std::to_string(std::max(gram_dev, comp_dev)),
                    t);
      traj.times.push_back(t);
      traj.samples.push_back(BiorthogonalBasis{kets, bras});
      gram_log.push_back(gram_dev);
      comp_log.push_back(comp_dev);
    }
    if (k == steps) break;
    ops.fill(g_fn, t, grid.dt);
    kets = rk4_step(
        [&](int stage, double, const Eigen::MatrixXcd& y) -> Eigen::MatrixXcd {
          return -imag_unit * (ops.at(stage) * y);
        },
        kets, t, grid.dt);
    bras = rk4_step(
        [&](int stage, double, const Eigen::MatrixXcd& y) -> Eigen::MatrixXcd {
          return -imag_unit * (ops.at(stage).adjoint() * y);
        },
        bras, t, grid.dt);
  }
  return traj;
}

Complex expectation(const DualStateVector& bra, const Operator& q, const StateVector& ket) {
  if (bra.size() != q.rows() || ket.size() != q.cols() || q.rows() != q.cols())
    throw Error(Errc::dimension_mismatch, "expectation: dims disagree");
  return bra.adjoint() * q * ket;
}

// ---------------------------------------------------------------------------
// nip_pipeline
// ---------------------------------------------------------------------------

namespace {

struct FlowState {
  Eigen::MatrixXcd kets, bras;
  Operator q, omega;
  StateVector psi;
  DualStateVector psi_theta;

  FlowState operator+(const FlowState& o) const {
    return {kets + o.kets, bras + o.bras,   Operator(q + o.q),
            Operator(omega + o.omega), StateVector(psi + o.psi),
            DualStateVector(psi_theta + o.psi_theta)};
  }
  friend FlowState operator*(double s, const FlowState& y) {
    return {s * y.kets, s * y.bras,   Operator(s * y.q),
            Operator(s * y.omega), StateVector(s * y.psi),
            DualStateVector(s * y.psi_theta)};
  }
  bool all_finite() const {
    return kets.allFinite() && bras.allFinite() && q.allFinite() && omega.allFinite() &&
           psi.allFinite() && psi_theta.allFinite();
  }
};

// One stride-spaced record kept for the stencil pass; stored for the margin
// points as well as for the reported samples.
struct OperatorRecord {
  double t;
  Operator theta, omega, h_spectral;
};

GeneratorFunction lookup_fn(const std::vector<OperatorRecord>& recs, double delta,
                            Operator OperatorRecord::*field) {
  GeneratorFunction fn;
  fn.dim = (recs.front().*field).rows();
  const double t0 = recs.front().t;
  fn.eval = [&recs, t0, delta, field](double t) -> Operator {
    const double pos = (t - t0) / delta;
    const long idx = std::lround(pos);
    if (idx < 0 || idx >= static_cast<long>(recs.size()) ||
        std::abs(pos - static_cast<double>(idx)) > 1e-6)
      throw Error(Errc::insufficient_samples, "pipeline stencil lookup off the sample grid");
    return recs[static_cast<size_t>(idx)].*field;
  };
  return fn;
}

}  // namespace

PipelineResult nip_pipeline(const GeneratorFunction& g_fn, const BiorthogonalBasis& basis0,
                            const TimeGrid& grid, const PipelineOptions& opt) {
  grid.validate();
  const Eigen::Index dim = g_fn.dim;
  if (basis0.kets.rows() != dim || basis0.size() != dim)
    throw Error(Errc::dimension_mismatch,
                "nip_pipeline: basis must hold dim members of dimension dim");
  if (opt.energies.size() != dim)
    throw Error(Errc::dimension_mismatch, "nip_pipeline: energies count must equal dim");
  const bool track_q = opt.q0.size() > 0;
  const bool track_state = opt.psi0.size() > 0;
  if (track_q && (opt.q0.rows() != dim || opt.q0.cols() != dim))
    throw Error(Errc::dimension_mismatch, "nip_pipeline: observable dim mismatch");
  if (track_state && (opt.psi0.size() != dim || opt.psi_theta0.size() != dim))
    throw Error(Errc::dimension_mismatch, "nip_pipeline: state dim mismatch");

  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
  {
    const double g0 = (basis0.gram() - id).norm();
    const double c0 = (basis0.completeness() - id).norm();
    if (g0 > opt.tol.basis_dev || c0 > opt.tol.basis_dev)
      throw Error(Errc::basis_degenerated,
                  "nip_pipeline: initial basis is not biorthonormal/complete (dev " +
                      std::to_string(std::max(g0, c0)) + ")");
  }

  FlowState y;
  y.kets = basis0.kets;
  y.bras = basis0.bras;
  if (track_q) y.q = opt.q0;
  if (track_state) {
    y.psi = opt.psi0;
    y.psi_theta = opt.psi_theta0;
  }
  if (opt.integrate_omega) {
    const Operator theta0 = metric_from_basis(Eigen::MatrixXcd(basis0.bras), opt.tol);
    y.omega = dyson_factorize(theta0, opt.gauge, opt.tol).omega;
  }

  const Eigen::VectorXcd energies_c = opt.energies.cast<Complex>();
  auto rhs_for = [&](const StageOps& ops) {
    return [&ops, &energies_c, track_q, track_state,
            integrate_omega = opt.integrate_omega](int stage, double, const FlowState& s) -> FlowState {
      const Operator& g = ops.at(stage);
      const Operator h = s.kets * energies_c.asDiagonal() * s.bras.adjoint();
      const Operator sigma = h - g;
      FlowState d;
      d.kets = -imag_unit * (g * s.kets);
      d.bras = -imag_unit * (g.adjoint() * s.bras);
      if (track_q) d.q = -imag_unit * (s.q * sigma - sigma * s.q);
      if (integrate_omega) d.omega = -imag_unit * (s.omega * sigma);
      if (track_state) {
        d.psi = -imag_unit * (g * s.psi);
        d.psi_theta = -imag_unit * (g.adjoint() * s.psi_theta);
      }
      return d;
    };
  };

  PipelineResult result;
  result.grid = grid;
  result.dim = dim;

  const long stride = grid.sample_stride;
  const long margin_steps = opt.store_operators ? 2 * stride : 0;
  const double delta = grid.sample_dt();

  std::vector<OperatorRecord> records;  // stride-spaced, covers the margins

  auto make_record = [&](double t, const FlowState& s) -> OperatorRecord {
    OperatorRecord rec;
    rec.t = t;
    rec.theta = metric_from_basis(Eigen::MatrixXcd(s.bras), opt.tol);
    rec.h_spectral = s.kets * energies_c.asDiagonal() * s.bras.adjoint();
    if (opt.integrate_omega) rec.omega = s.omega;
    return rec;
  };

  // Backward margin, so the first reported samples own a full stencil.
  if (margin_steps > 0) {
    FlowState yb = y;
    std::vector<OperatorRecord> pre;
    StageOps ops;
    for (long k = 0; k < margin_steps; ++k) {
      const double t = grid.t_start - static_cast<double>(k) * grid.dt;
      ops.fill(g_fn, t, -grid.dt);
      yb = rk4_step(rhs_for(ops), yb, t, -grid.dt);
      if ((k + 1) % stride == 0) {
        const double tb = grid.t_start - static_cast<double>(k + 1) * grid.dt;
        if (!yb.all_finite())
          throw Error(Errc::non_finite_state, "nip_pipeline: margin flow diverged", tb);
        pre.push_back(make_record(tb, yb));
      }
    }
    std::reverse(pre.begin(), pre.end());
    records = std::move(pre);
  }

  // Main sweep plus the forward margin.
  const long steps = grid.n_steps();
  std::vector<size_t> sample_record_index;
  StageOps ops;
  for (long k = 0; k <= steps + margin_steps; ++k) {
    const double t = grid.time_at(k);
    if (k <= steps && opt.step_monitor) opt.step_monitor(t);

    if (k % stride == 0) {
      if (!y.all_finite()) throw Error(Errc::non_finite_state, "nip_pipeline: flow diverged", t);
      if (opt.store_operators) records.push_back(make_record(t, y));
      if (k <= steps) {
        PipelineSample s;
        s.t = t;
        const OperatorRecord rec = opt.store_operators ? records.back() : make_record(t, y);
        s.gram_dev = (y.bras.adjoint() * y.kets - id).norm();
        s.completeness_dev = (y.kets * y.bras.adjoint() - id).norm();
        if (s.gram_dev > opt.tol.basis_dev || s.completeness_dev > opt.tol.basis_dev)
          throw Error(Errc::basis_degenerated,
                      "nip_pipeline: basis deviation " +
                          std::to_string(std::max(s.gram_dev, s.completeness_dev)),
                      t);
        s.theta_min_eig = smallest_hermitian_eigenvalue(rec.theta);
        s.qh_h = check_quasi_hermiticity(rec.h_spectral, rec.theta, opt.tol);
        s.h_eigs = sorted_eigenvalues(rec.h_spectral);
        if (track_q) {
          s.qh_q = check_quasi_hermiticity(y.q, rec.theta, opt.tol);
          s.q_eigs = sorted_eigenvalues(y.q);
        }
        if (track_state) {
          s.overlap = y.psi_theta.adjoint() * y.psi;
          s.psi = y.psi;
          s.psi_theta = y.psi_theta;
          if (track_q) {
            s.expect_raw = expectation(y.psi_theta, y.q, y.psi);
            s.expect_norm = (std::abs(s.overlap) > 0.0) ? s.expect_raw / s.overlap : Complex{};
          }
        }
        if (opt.integrate_omega)
          s.omega_theta_resid = (y.omega.adjoint() * y.omega - rec.theta).norm() / rec.theta.norm();
        if (opt.store_operators) {
          s.theta = rec.theta;
          s.h_spectral = rec.h_spectral;
          if (opt.integrate_omega) s.omega = y.omega;
          sample_record_index.push_back(records.size() - 1);
        }
        s.flow_g = s.flow_sigma = s.htilde_resid = s.sigma_gauge_dev = kNaN;
        result.samples.push_back(std::move(s));
      }
    }
    if (k == steps + margin_steps) break;
    ops.fill(g_fn, t, grid.dt);
    y = rk4_step(rhs_for(ops), y, t, grid.dt);
  }

  // Stencil pass over the stride-spaced records: metric-flow residuals in
  // both forms, and the reconstruction H_tilde = G + Sigma against the
  // spectral Hamiltonian, with Sigma taken from the transported Omega and,
  // as a diagnostic, from per-sample re-factorization.
  if (opt.store_operators) {
    GeneratorFunction theta_fn = lookup_fn(records, delta, &OperatorRecord::theta);
    GeneratorFunction omega_fn = lookup_fn(records, delta, &OperatorRecord::omega);

    std::vector<OperatorRecord> fact;
    fact.reserve(records.size());
    for (const auto& rec : records) {
      OperatorRecord f;
      f.t = rec.t;
      f.omega = dyson_factorize(rec.theta, opt.gauge, opt.tol).omega;
      fact.push_back(std::move(f));
    }
    GeneratorFunction omega_fact_fn = lookup_fn(fact, delta, &OperatorRecord::omega);

    for (size_t i = 0; i < result.samples.size(); ++i) {
      PipelineSample& s = result.samples[i];
      const OperatorRecord& rec = records[sample_record_index[i]];
      const Operator g = g_fn(s.t);
      const Operator sigma_phys = rec.h_spectral - g;
      GeneratorFunction sigma_const = GeneratorFunction::constant(sigma_phys);
      GeneratorFunction g_const = GeneratorFunction::constant(g);
      s.flow_sigma = metric_flow_residual_sigma(theta_fn, sigma_const, s.t, delta);
      s.flow_g = metric_flow_residual_g(theta_fn, g_const, s.t, delta);
      const double h_norm = rec.h_spectral.norm();
      if (opt.integrate_omega) {
        const Operator sigma_fd = coriolis_from_dyson(omega_fn, s.t, delta, opt.tol);
        s.htilde_resid = (g + sigma_fd - rec.h_spectral).norm() / h_norm;
      }
      const Operator sigma_fact = coriolis_from_dyson(omega_fact_fn, s.t, delta, opt.tol);
      s.sigma_gauge_dev = (g + sigma_fact - rec.h_spectral).norm() / h_norm;
    }
  }
  return result;
}

}  // namespace nip
