#pragma once

#include <vector>

#include "nip/flow_types.hpp"
#include "nip/operator_core.hpp"

namespace nip {

/// Choice of the free unitary factor in Omega = V^dagger * theta * U.
enum class Gauge {
  identity_v,  // V = I, Omega = theta * U
  sqrt_theta,  // V = U, Omega = sqrt(Theta), Hermitian positive
};

/// Factorization Theta = U^dagger theta^2 U together with the Dyson map
/// Omega = V^dagger theta U built from it.
struct MetricDecomposition {
  Operator theta_matrix;  // Hermitian positive definite
  Operator sqrt_diag;     // diagonal, real positive entries
  Operator u_unitary;
  Operator v_unitary;
  Operator omega;         // omega^dagger * omega == theta_matrix
};

/// Theta = sum_n |bra_n><bra_n|. Hermitian by construction; throws
/// RankDeficient when the result fails to be positive definite, i.e. when
/// the supplied vectors do not span the space.
Operator metric_from_basis(const std::vector<DualStateVector>& bras,
                           const Tolerances& tol = default_tolerances());
Operator metric_from_basis(const Eigen::MatrixXcd& bras_as_columns,
                           const Tolerances& tol = default_tolerances());

/// Relative residual ||A^dagger Theta - Theta A||_F / ||Theta A||_F; zero
/// marks A as an observable in the Theta-amended space.
double check_quasi_hermiticity(const Operator& a, const Operator& theta,
                               const Tolerances& tol = default_tolerances());

MetricDecomposition dyson_factorize(const Operator& theta, Gauge gauge = Gauge::identity_v,
                                    const Tolerances& tol = default_tolerances());
MetricDecomposition dyson_factorize(const Operator& theta, const Operator& v_unitary,
                                    const Tolerances& tol = default_tolerances());

/// Coriolis generator i * Omega^-1(t) * Omega_dot(t). The derivative comes
/// from the registered analytic derivative when present, otherwise from the
/// fourth-order stencil {t +- dt_probe, t +- 2 dt_probe}.
Operator coriolis_from_dyson(const GeneratorFunction& omega_fn, double t, double dt_probe,
                             const Tolerances& tol = default_tolerances());

/// H = sum_n |ket_n> E_n <bra_n|.
Operator hamiltonian_from_spectral(const SpectralHamiltonian& spec);

/// Residual of i Theta_dot = Theta Sigma - Sigma^dagger Theta, relative to
/// ||Theta||_F, with Theta_dot from the fourth-order stencil.
double metric_flow_residual_sigma(const GeneratorFunction& theta_fn,
                                  const GeneratorFunction& sigma_fn, double t, double dt_probe);

/// Residual of i Theta_dot = G^dagger Theta - Theta G, same conventions.
double metric_flow_residual_g(const GeneratorFunction& theta_fn, const GeneratorFunction& g_fn,
                              double t, double dt_probe);

/// Integrates the operator flow i Theta_dot = G^dagger Theta - Theta G with
/// fixed-step RK4, re-symmetrizing after every step. Positivity is only
/// monitored: MetricDegenerated carries the first time the smallest
/// eigenvalue reaches the positive-definiteness floor. The trajectory log
/// "theta_min_eig" records the smallest eigenvalue per sample.
Trajectory<Operator> solve_metric_ode(const GeneratorFunction& g_fn, const Operator& theta0,
                                      const TimeGrid& grid,
                                      const Tolerances& tol = default_tolerances());

}  // namespace nip
