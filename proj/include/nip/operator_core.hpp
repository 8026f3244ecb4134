#pragma once

#include <vector>

#include "nip/types.hpp"

namespace nip {

/// Eigendecomposition of a Hermitian operator. Columns of `basis` are the
/// eigenvectors, eigenvalues are sorted ascending and every eigenvector is
/// rescaled so that its largest-magnitude component is real and positive,
/// which makes repeated runs bit-reproducible.
struct HermitianEig {
  RealVector eigenvalues;
  Operator basis;  // M = basis * diag(eigenvalues) * basis^dagger
};

/// Left/right eigensystem of a diagonalizable (generally non-Hermitian)
/// operator. Columns of `right_kets` are the kets, columns of `left_bras`
/// the dual vectors; <left_m|right_n> = delta_mn and
/// sum_n |right_n><left_n| = I hold by construction.
struct BiorthogonalEig {
  Eigen::VectorXcd eigenvalues;  // sorted by (real, imag) ascending
  Eigen::MatrixXcd right_kets;
  Eigen::MatrixXcd left_bras;
};

Operator adjoint(const Operator& m);

Operator commutator(const Operator& a, const Operator& b);

/// Throws NonHermitianInput when ||M - M^dagger||_F > herm_rel * ||M||_F.
HermitianEig hermitian_eig(const Operator& m, const Tolerances& tol = default_tolerances());

/// Unique Hermitian positive square root. Throws NotPositiveDefinite when
/// any eigenvalue falls at or below pd_rel * ||T||_F.
Operator positive_sqrt(const Operator& t, const Tolerances& tol = default_tolerances());

/// Throws DegenerateSpectrum when two eigenvalues are closer than
/// degenerate_rel * ||H||_F and DefectiveMatrix when the eigenvector matrix
/// condition estimate exceeds kappa_max.
BiorthogonalEig biorthogonal_eig(const Operator& h, const Tolerances& tol = default_tolerances());

/// Throws SingularMatrix when the matrix is singular or the condition
/// estimate ||M||_F * ||M^-1||_F exceeds kappa_max.
Operator inverse(const Operator& m, const Tolerances& tol = default_tolerances());

/// Rescales v so its largest-magnitude component is real positive.
void fix_phase(Eigen::Ref<Eigen::VectorXcd> v);

}  // namespace nip
