#include "nip/metric_engine.hpp"

#include <cmath>

namespace nip {

namespace {

double smallest_eigenvalue(const Operator& hermitian) {
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (hermitian + hermitian.adjoint()),
                                             Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error(Errc::convergence_failure, "smallest_eigenvalue: eigensolver failed");
  return es.eigenvalues()[0];
}

}  // namespace

Operator metric_from_basis(const Eigen::MatrixXcd& bras, const Tolerances& tol) {
  if (bras.cols() == 0)
    throw Error(Errc::rank_deficient, "metric_from_basis: empty bra set");
  require_finite(bras, "metric_from_basis");
  const Eigen::Index dim = bras.rows();
  Operator theta = Operator::Zero(dim, dim);
  for (Eigen::Index j = 0; j < bras.cols(); ++j)
    theta.noalias() += bras.col(j) * bras.col(j).adjoint();
  const double min_eig = smallest_eigenvalue(theta);
  if (min_eig <= tol.pd_rel * theta.norm())
    throw Error(Errc::rank_deficient,
                "metric_from_basis: bras do not span the space (min eigenvalue " +
                    std::to_string(min_eig) + ")");
  return theta;
}

Operator metric_from_basis(const std::vector<DualStateVector>& bras, const Tolerances& tol) {
  if (bras.empty()) throw Error(Errc::rank_deficient, "metric_from_basis: empty bra set");
  Eigen::MatrixXcd cols(bras.front().size(), static_cast<Eigen::Index>(bras.size()));
  for (size_t j = 0; j < bras.size(); ++j) {
    if (bras[j].size() != cols.rows())
      throw Error(Errc::dimension_mismatch, "metric_from_basis: bra lengths disagree");
    cols.col(static_cast<Eigen::Index>(j)) = bras[j];
  }
  return metric_from_basis(cols, tol);
}

double check_quasi_hermiticity(const Operator& a, const Operator& theta, const Tolerances& tol) {
  require_square(a, "check_quasi_hermiticity");
  require_same_dim(a, theta, "check_quasi_hermiticity");
  if ((theta - theta.adjoint()).norm() > tol.herm_rel * theta.norm())
    throw Error(Errc::non_hermitian_input, "check_quasi_hermiticity: metric is not Hermitian");
  const Operator lhs = a.adjoint() * theta;
  const Operator rhs = theta * a;
  const double den = rhs.norm();
  if (den == 0.0) return 0.0;
  return (lhs - rhs).norm() / den;
}

MetricDecomposition dyson_factorize(const Operator& theta, Gauge gauge, const Tolerances& tol) {
  MetricDecomposition dec;
  HermitianEig eig = hermitian_eig(theta, tol);
  if (eig.eigenvalues[0] <= tol.pd_rel * theta.norm())
    throw Error(Errc::not_positive_definite,
                "dyson_factorize: metric eigenvalue " + std::to_string(eig.eigenvalues[0]) +
                    " is not positive");
  dec.theta_matrix = theta;
  dec.sqrt_diag = eig.eigenvalues.cwiseSqrt().cast<Complex>().asDiagonal();
  dec.u_unitary = eig.basis.adjoint();
  dec.v_unitary = (gauge == Gauge::sqrt_theta)
                      ? dec.u_unitary
                      : Operator(Operator::Identity(theta.rows(), theta.cols()));
  dec.omega = dec.v_unitary.adjoint() * dec.sqrt_diag * dec.u_unitary;
  return dec;
}

MetricDecomposition dyson_factorize(const Operator& theta, const Operator& v_unitary,
                                    const Tolerances& tol) {
  require_same_dim(theta, v_unitary, "dyson_factorize");
  const double unit_dev = (v_unitary.adjoint() * v_unitary -
                           Operator::Identity(v_unitary.rows(), v_unitary.cols()))
                              .norm();
  if (unit_dev > tol.herm_rel * std::sqrt(static_cast<double>(v_unitary.rows())))
    throw Error(Errc::not_unitary,
                "dyson_factorize: V deviates from unitarity by " + std::to_string(unit_dev));
  MetricDecomposition dec = dyson_factorize(theta, Gauge::identity_v, tol);
  dec.v_unitary = v_unitary;
  dec.omega = v_unitary.adjoint() * dec.sqrt_diag * dec.u_unitary;
  return dec;
}

Operator coriolis_from_dyson(const GeneratorFunction& omega_fn, double t, double dt_probe,
                             const Tolerances& tol) {
  if (!(dt_probe > 0.0))
    throw Error(Errc::config_error, "coriolis_from_dyson: dt_probe must be positive");
  Operator omega_dot = omega_fn.has_derivative()
                           ? omega_fn.derivative(t)
                           : central_derivative(omega_fn.eval, t, dt_probe);
  return imag_unit * inverse(omega_fn(t), tol) * omega_dot;
}

Operator hamiltonian_from_spectral(const SpectralHamiltonian& spec) {
  const auto& b = spec.basis;
  if (b.kets.rows() != b.bras.rows() || b.kets.cols() != b.bras.cols())
    throw Error(Errc::dimension_mismatch, "hamiltonian_from_spectral: ket/bra shapes disagree");
  if (spec.energies.size() != b.size())
    throw Error(Errc::dimension_mismatch, "hamiltonian_from_spectral: energy count mismatch");
  if (!spec.energies.allFinite())
    throw Error(Errc::non_finite_state, "hamiltonian_from_spectral: energies not finite");
  return b.kets * spec.energies.cast<Complex>().asDiagonal() * b.bras.adjoint();
}

double metric_flow_residual_sigma(const GeneratorFunction& theta_fn,
                                  const GeneratorFunction& sigma_fn, double t, double dt_probe) {
  const Operator theta = theta_fn(t);
  const Operator sigma = sigma_fn(t);
  const Operator theta_dot = theta_fn.has_derivative()
                                 ? theta_fn.derivative(t)
                                 : central_derivative(theta_fn.eval, t, dt_probe);
  const Operator defect = imag_unit * theta_dot - theta * sigma + sigma.adjoint() * theta;
  return defect.norm() / theta.norm();
}

double metric_flow_residual_g(const GeneratorFunction& theta_fn, const GeneratorFunction& g_fn,
                              double t, double dt_probe) {
  const Operator theta = theta_fn(t);
  const Operator g = g_fn(t);
  const Operator theta_dot = theta_fn.has_derivative()
                                 ? theta_fn.derivative(t)
                                 : central_derivative(theta_fn.eval, t, dt_probe);
  const Operator defect = imag_unit * theta_dot - g.adjoint() * theta + theta * g;
  return defect.norm() / theta.norm();
}

Trajectory<Operator> solve_metric_ode(const GeneratorFunction& g_fn, const Operator& theta0,
                                      const TimeGrid& grid, const Tolerances& tol) {
  grid.validate();
  require_square(theta0, "solve_metric_ode");
  if ((theta0 - theta0.adjoint()).norm() > tol.herm_rel * theta0.norm())
    throw Error(Errc::non_hermitian_input, "solve_metric_ode: theta0 is not Hermitian");

  auto rhs = [](const Operator& g, const Operator& th) -> Operator {
    return -imag_unit * (g.adjoint() * th - th * g);
  };

  Trajectory<Operator> traj;
  traj.grid = grid;
  auto& min_log = traj.logs["theta_min_eig"];

  Operator theta = 0.5 * (theta0 + theta0.adjoint());
  const long steps = grid.n_steps();
  for (long k = 0; k <= steps; ++k) {
    const double t = grid.time_at(k);
    const double min_eig = smallest_eigenvalue(theta);
    if (min_eig <= tol.pd_rel * theta.norm())
      throw Error(Errc::metric_degenerated,
                  "solve_metric_ode: metric lost positivity (min eigenvalue " +
                      std::to_string(min_eig) + ")",
                  t);
    if (k % grid.sample_stride == 0) {
      traj.times.push_back(t);
      traj.samples.push_back(theta);
      min_log.push_back(min_eig);
    }
    if (k == steps) break;

    const double dt = grid.dt;
    const Operator g0 = g_fn(t);
    const Operator gm = g_fn(t + 0.5 * dt);
    const Operator g1 = g_fn(t + dt);
    const Operator k1 = rhs(g0, theta);
    const Operator k2 = rhs(gm, theta + 0.5 * dt * k1);
    const Operator k3 = rhs(gm, theta + 0.5 * dt * k2);
    const Operator k4 = rhs(g1, theta + dt * k3);
    theta += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    theta = Operator(0.5 * (theta + theta.adjoint()));  // temp: adjoint aliases
    if (!theta.allFinite())
      throw Error(Errc::non_finite_state, "solve_metric_ode: flow diverged", t + dt);
  }
  return traj;
}

}  // namespace nip
