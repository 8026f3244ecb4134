#pragma once

#include <functional>
#include <optional>

#include "nip/flow_types.hpp"
#include "nip/metric_engine.hpp"

namespace nip {

/// Non-Hermitian density matrix; trace stays 1 along the commutator flow.
struct DensityMatrix {
  Operator matrix;
};

/// rho = |psi><psi_theta| / <psi_theta|psi>.
DensityMatrix make_pure_density(const StateVector& psi, const DualStateVector& psi_theta);

/// i d/dt |psi> = G(t) |psi>, classic fixed-step RK4.
Trajectory<StateVector> propagate_ket(const GeneratorFunction& g_fn, const StateVector& psi0,
                                      const TimeGrid& grid);

/// i d/dt |psi_theta> = G^dagger(t) |psi_theta>.
Trajectory<DualStateVector> propagate_bra(const GeneratorFunction& g_fn,
                                          const DualStateVector& psi_theta0,
                                          const TimeGrid& grid);

/// i dQ/dt = Q Sigma - Sigma Q + K. K defaults to zero. Logs the sorted
/// eigenvalues of Q per sample as q_eig_<k>_re / q_eig_<k>_im for
/// isospectrality monitoring.
Trajectory<Operator> propagate_observable(const GeneratorFunction& sigma_fn, const Operator& q0,
                                          const std::optional<GeneratorFunction>& k_fn,
                                          const TimeGrid& grid);

/// The equivalent generator-side form i dQ/dt = G Q - Q G + K.
Trajectory<Operator> propagate_observable_gform(const GeneratorFunction& g_fn, const Operator& q0,
                                                const std::optional<GeneratorFunction>& k_fn,
                                                const TimeGrid& grid);

/// i d/dt rho = G rho - rho G. Logs |trace(rho) - 1| as "trace_dev".
Trajectory<DensityMatrix> propagate_density(const GeneratorFunction& g_fn,
                                            const DensityMatrix& rho0, const TimeGrid& grid);

/// Propagates all kets under G and all bras under G^dagger. Logs "gram_dev"
/// and "completeness_dev" per sample; throws BasisDegenerated when either
/// exceeds basis_dev.
Trajectory<BiorthogonalBasis> propagate_basis(const GeneratorFunction& g_fn,
                                              const BiorthogonalBasis& basis0,
                                              const TimeGrid& grid,
                                              const Tolerances& tol = default_tolerances());

/// Bilinear form <bra|q|ket>; no normalization is applied.
Complex expectation(const DualStateVector& bra, const Operator& q, const StateVector& ket);

struct PipelineOptions {
  RealVector energies;             // E_n for the spectral Hamiltonian
  Gauge gauge = Gauge::identity_v;
  Operator q0;                     // tracked observable; empty to skip
  StateVector psi0;                // tracked state pair; empty to skip
  DualStateVector psi_theta0;
  bool integrate_omega = true;     // transport Omega along i Omega_dot = Omega Sigma
  bool store_operators = true;     // keep Theta/Omega/H samples and run the
                                   // finite-difference consistency pass
  Tolerances tol{};
  /// Called at the start of every step inside [t_start, t_end]; scenarios
  /// use it to watch model-level positivity and abort with a typed error.
  std::function<void(double)> step_monitor;
};

struct PipelineSample {
  double t = 0.0;
  Complex overlap{};        // <psi_theta|psi>
  Complex expect_raw{};     // <psi_theta|Q|psi>
  Complex expect_norm{};    // expect_raw / overlap
  double gram_dev = 0.0;
  double completeness_dev = 0.0;
  double qh_h = 0.0;        // quasi-Hermiticity residual of H(t)
  double qh_q = 0.0;        // same for Q(t)
  double theta_min_eig = 0.0;
  double omega_theta_resid = 0.0;  // ||Omega^dag Omega - Theta|| / ||Theta||
  Eigen::VectorXcd h_eigs;
  Eigen::VectorXcd q_eigs;
  StateVector psi;
  DualStateVector psi_theta;
  Operator theta;
  Operator omega;
  Operator h_spectral;
  // Filled by the finite-difference pass over the stored samples.
  double flow_g = 0.0;
  double flow_sigma = 0.0;
  double htilde_resid = 0.0;       // ||G + Sigma_fd - H|| / ||H||, Sigma_fd from
                                   // the transported Omega(t)
  double sigma_gauge_dev = 0.0;    // same quantity in the per-sample
                                   // re-factorization gauge (diagnostic)
};

struct PipelineResult {
  TimeGrid grid;
  Eigen::Index dim = 0;
  std::vector<PipelineSample> samples;
};

/// Runs the full reconstruction loop: basis under G / G^dagger, the metric
/// from the propagated bras, the spectral Hamiltonian with conserved E_n,
/// Sigma = H - G feeding the observable flow and the Omega transport, and
/// the tracked state pair for predictions. Every invariant residual is
/// evaluated per sample; the derivative-based ones come from fourth-order
/// stencils over the sample grid, with the trajectory extended past both
/// ends so that every reported sample has a full stencil.
PipelineResult nip_pipeline(const GeneratorFunction& g_fn, const BiorthogonalBasis& basis0,
                            const TimeGrid& grid, const PipelineOptions& options);

}  // namespace nip
