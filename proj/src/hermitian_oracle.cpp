#include "nip/hermitian_oracle.hpp"

#include <cmath>

namespace nip {

StateVector lift_state(const Operator& omega, const StateVector& psi) {
  if (omega.cols() != psi.size())
    throw Error(Errc::dimension_mismatch, "lift_state: dims disagree");
  return omega * psi;
}

Operator lift_operator(const Operator& omega, const Operator& a, const Tolerances& tol) {
  require_square(omega, "lift_operator");
  require_same_dim(omega, a, "lift_operator");
  return omega * a * inverse(omega, tol);
}

double textbook_expectation(const TextbookSnapshot& snapshot, const Tolerances& tol) {
  const Operator& q = snapshot.q_T;
  if ((q - q.adjoint()).norm() > tol.herm_rel * q.norm())
    throw Error(Errc::non_hermitian_input, "textbook_expectation: observable is not Hermitian");
  const Complex value = expectation(snapshot.psi_T, q, snapshot.psi_T);
  if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value)))
    throw Error(Errc::non_hermitian_input,
                "textbook_expectation: imaginary part " + std::to_string(value.imag()));
  return value.real();
}

double cross_picture_check(const GeneratorFunction& omega_fn, const GeneratorFunction& h_fn,
                           const StateVector& psi0, const Operator& q_T, const TimeGrid& grid,
                           const Tolerances& tol) {
  grid.validate();
  const Eigen::Index dim = omega_fn.dim;
  if (h_fn.dim != dim || psi0.size() != dim || q_T.rows() != dim || q_T.cols() != dim)
    throw Error(Errc::dimension_mismatch, "cross_picture_check: dims disagree");

  const double probe = grid.dt;
  GeneratorFunction g_fn;
  g_fn.dim = dim;
  g_fn.eval = [omega_fn, h_fn, probe, tol](double t) -> Operator {
    const Operator omega = omega_fn(t);
    const Operator omega_inv = inverse(omega, tol);
    const Operator omega_dot = omega_fn.has_derivative()
                                   ? omega_fn.derivative(t)
                                   : central_derivative(omega_fn.eval, t, probe);
    return omega_inv * h_fn(t) * omega - imag_unit * omega_inv * omega_dot;
  };

  // Initial data in the working space, pulled down through Omega(0).
  const Operator omega0 = omega_fn(grid.t_start);
  const Operator omega0_inv = inverse(omega0, tol);
  const HermitianEig h_eig = hermitian_eig(h_fn(grid.t_start), tol);

  BiorthogonalBasis basis0;
  basis0.kets = omega0_inv * h_eig.basis;
  basis0.bras = omega0.adjoint() * h_eig.basis;

  PipelineOptions opt;
  opt.energies = h_eig.eigenvalues;
  opt.q0 = omega0_inv * q_T * omega0;
  opt.psi0 = omega0_inv * psi0;
  opt.psi_theta0 = omega0.adjoint() * psi0;
  opt.store_operators = false;
  opt.tol = tol;
  const PipelineResult nip_run = nip_pipeline(g_fn, basis0, grid, opt);

  const Trajectory<StateVector> textbook = propagate_ket(h_fn, psi0, grid);

  double max_dev = 0.0;
  for (size_t i = 0; i < nip_run.samples.size(); ++i) {
    const Complex reference = expectation(textbook.samples[i], q_T, textbook.samples[i]);
    max_dev = std::max(max_dev, std::abs(nip_run.samples[i].expect_raw - reference));
  }
  return max_dev;
}

}  // namespace nip
