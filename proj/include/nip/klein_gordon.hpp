#pragma once

#include <optional>

#include "nip/evolution_engine.hpp"

namespace nip {

/// 1-D lattice with Dirichlet walls; site j sits at x_j = (j+1) * dx for
/// j = 0 .. n_sites-1. Units hbar = c = 1. The mass-squared profile may be
/// complex only when the scenario explicitly allows it.
struct LatticeModel {
  Eigen::Index n_sites = 0;
  double dx = 1.0;
  std::function<Complex(Eigen::Index site, double t)> mass_sq_fn;

  double site_x(Eigen::Index j) const { return (static_cast<double>(j) + 1.0) * dx; }
};

/// Two-component wave function: upper = i d/dt psi, lower = psi.
struct FvState {
  Eigen::VectorXcd upper;
  Eigen::VectorXcd lower;
};

/// Block-swap operator of the indefinite inner product; P^2 = I, P = P^dag.
struct KreinStructure {
  Operator p_matrix;
};

KreinStructure make_krein(Eigen::Index n_sites);

/// D(t) = -Laplacian + m^2(x, t): 3-point Dirichlet stencil, diagonal
/// 2/dx^2 + m^2(x_j, t), bands -1/dx^2.
Operator build_lattice_d(const LatticeModel& model, double t);

/// [[0, D], [I, 0]] acting on (upper, lower).
Operator build_fv_generator(const Operator& d);

/// [[0, I], [conj(D), 0]]; equals the adjoint of the ket generator for
/// real D.
Operator build_fv_bra_generator(const Operator& d);

/// Theta = blockdiag(D^-1/2, D^1/2); requires D Hermitian positive
/// definite (a non-positive eigenvalue means a tachyonic or zero mode).
Operator stationary_kg_metric(const Operator& d, const Tolerances& tol = default_tolerances());

FvState fv_pack(const Eigen::VectorXcd& psi, const Eigen::VectorXcd& dpsi_dt);
void fv_unpack(const FvState& state, Eigen::VectorXcd& psi, Eigen::VectorXcd& dpsi_dt);

Eigen::VectorXcd fv_to_vector(const FvState& state);
FvState fv_from_vector(const Eigen::VectorXcd& v);

Complex krein_product(const KreinStructure& k, const FvState& a, const FvState& b);

struct KgOptions {
  std::optional<RealVector> energies;  // override for the free E_n
  Gauge gauge = Gauge::identity_v;
  Operator q0;                         // tracked observable; empty = H(t_i)
  bool store_operators = true;
  Tolerances tol{};
};

struct KgRunResult {
  PipelineResult pipeline;
  std::vector<double> d_min_eig;   // smallest eigenvalue of D(t) per sample
  std::vector<double> krein_self;  // <psi|P|psi> per sample (real part)
};

/// Full reconstruction run for the lattice model: G(t) = [[0, D(t)], [I, 0]],
/// initial basis from the eigenvectors of G(t_i) with E_n the instantaneous
/// eigenvalues (override via options), Omega transported from its factorized
/// initial value. Raises MetricDegenerated, stamped with the step time, as
/// soon as D(t) loses positivity.
KgRunResult kg_scenario(const LatticeModel& model, const FvState& initial, const TimeGrid& grid,
                        const KgOptions& options = {});

/// Certifies that the lower components solve the second-order form: largest
/// relative residual of (psi(t+dt) - 2 psi(t) + psi(t-dt))/dt^2 + D(t) psi(t)
/// over the interior sample times. Needs at least five samples. Zero input
/// data gives zero by convention.
double kg_residual(const std::vector<double>& times,
                   const std::vector<Eigen::VectorXcd>& psi_lower, const LatticeModel& model);
double kg_residual(const KgRunResult& run, const LatticeModel& model);

/// Instantaneous lattice eigenmode: psi_j = sin(k_index pi x_j / L) with
/// L = (n_sites + 1) dx, oscillating at the dispersion frequency
/// omega^2 = (2 - 2 cos(k dx))/dx^2 + m^2(t). Returns the packed state.
FvState kg_plane_wave_mode(const LatticeModel& model, int k_index, double t);

}  // namespace nip
