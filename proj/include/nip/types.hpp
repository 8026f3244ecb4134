#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace nip {

using Complex = std::complex<double>;

/// Dense complex square matrix; the common currency for generators,
/// metrics, Dyson maps and observables.
using Operator = Eigen::MatrixXcd;

/// Complex column vector |psi>.
using StateVector = Eigen::VectorXcd;

/// Metric-dressed ket |psi_Theta> = Theta |psi>. Same storage as a
/// StateVector; the distinction is semantic.
using DualStateVector = Eigen::VectorXcd;

using RealVector = Eigen::VectorXd;

inline constexpr Complex imag_unit{0.0, 1.0};

enum class Errc {
  dimension_mismatch,
  non_hermitian_input,
  convergence_failure,
  not_positive_definite,
  not_unitary,
  defective_matrix,
  degenerate_spectrum,
  singular_matrix,
  rank_deficient,
  non_finite_state,
  basis_degenerated,
  metric_degenerated,
  insufficient_samples,
  config_error,
  check_failed,
};

const char* errc_name(Errc c);

/// Carries a machine-checkable error code plus, for failures that occur
/// mid-propagation, the time at which the run broke down.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Error(Errc code, const std::string& what, double t)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what + " (t = " + std::to_string(t) + ")"),
        code_(code),
        time_(t),
        has_time_(true) {}

  Errc code() const { return code_; }
  bool has_time() const { return has_time_; }
  double time() const { return time_; }

 private:
  Errc code_;
  double time_ = 0.0;
  bool has_time_ = false;
};

/// Numerical thresholds used across the library. All the *_rel members are
/// relative to the Frobenius norm of the operator they are applied to.
struct Tolerances {
  double herm_rel = 1e-10;        // Hermiticity acceptance
  double pd_rel = 1e-12;          // positive-definiteness floor
  double kappa_max = 1e10;        // condition-number ceiling
  double degenerate_rel = 1e-8;   // eigenvalue-gap floor
  double basis_dev = 1e-6;        // Gram / completeness ceiling
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

inline void require_square(const Operator& m, const char* who) {
  if (m.rows() != m.cols())
    throw Error(Errc::dimension_mismatch, std::string(who) + ": matrix is not square");
}

inline void require_same_dim(const Operator& a, const Operator& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(Errc::dimension_mismatch, std::string(who) + ": operand dimensions disagree");
}

inline void require_finite(const Eigen::MatrixXcd& m, const char* who) {
  if (!m.allFinite())
    throw Error(Errc::non_finite_state, std::string(who) + ": non-finite entries");
}

}  // namespace nip
