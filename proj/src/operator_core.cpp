#include "nip/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nip {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::non_hermitian_input: return "NonHermitianInput";
    case Errc::convergence_failure: return "ConvergenceFailure";
    case Errc::not_positive_definite: return "NotPositiveDefinite";
    case Errc::not_unitary: return "NotUnitary";
    case Errc::defective_matrix: return "DefectiveMatrix";
    case Errc::degenerate_spectrum: return "DegenerateSpectrum";
    case Errc::singular_matrix: return "SingularMatrix";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::non_finite_state: return "NonFiniteState";
    case Errc::basis_degenerated: return "BasisDegenerated";
    case Errc::metric_degenerated: return "MetricDegenerated";
    case Errc::insufficient_samples: return "InsufficientSamples";
    case Errc::config_error: return "ConfigError";
    case Errc::check_failed: return "CheckFailed";
  }
  return "UnknownError";
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
  Eigen::Index k = 0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best) {
      best = a;
      k = i;
    }
  }
  if (best == 0.0) return;
  v *= std::conj(v[k]) / best;
}

Operator adjoint(const Operator& m) {
  require_square(m, "adjoint");
  return m.adjoint();
}

Operator commutator(const Operator& a, const Operator& b) {
  require_square(a, "commutator");
  require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

HermitianEig hermitian_eig(const Operator& m, const Tolerances& tol) {
  require_square(m, "hermitian_eig");
  require_finite(m, "hermitian_eig");
  const double scale = m.norm();
  if ((m - m.adjoint()).norm() > tol.herm_rel * scale)
    throw Error(Errc::non_hermitian_input, "hermitian_eig: input is not Hermitian");

  // Symmetrize before solving so results do not depend on roundoff in the
  // strictly lower triangle.
  Operator sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> es(sym);
  if (es.info() != Eigen::Success)
    throw Error(Errc::convergence_failure, "hermitian_eig: eigensolver failed");

  HermitianEig out;
  out.eigenvalues = es.eigenvalues();  // ascending
  out.basis = es.eigenvectors();
  for (Eigen::Index j = 0; j < out.basis.cols(); ++j) fix_phase(out.basis.col(j));
  return out;
}

Operator positive_sqrt(const Operator& t, const Tolerances& tol) {
  HermitianEig eig = hermitian_eig(t, tol);
  const double floor = tol.pd_rel * t.norm();
  if (eig.eigenvalues.size() > 0 && eig.eigenvalues[0] <= floor)
    throw Error(Errc::not_positive_definite,
                "positive_sqrt: smallest eigenvalue " + std::to_string(eig.eigenvalues[0]) +
                    " at or below floor " + std::to_string(floor));
  Operator root = eig.basis * eig.eigenvalues.cwiseSqrt().asDiagonal() * eig.basis.adjoint();
  return 0.5 * (root + root.adjoint());
}

BiorthogonalEig biorthogonal_eig(const Operator& h, const Tolerances& tol) {
  require_square(h, "biorthogonal_eig");
  require_finite(h, "biorthogonal_eig");
  const Eigen::Index n = h.rows();

  Eigen::ComplexEigenSolver<Operator> ces(h, /*computeEigenvectors=*/true);
  if (ces.info() != Eigen::Success)
    throw Error(Errc::convergence_failure, "biorthogonal_eig: eigensolver failed");

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXcd& ev = ces.eigenvalues();
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (ev[a].real() != ev[b].real()) return ev[a].real() < ev[b].real();
    return ev[a].imag() < ev[b].imag();
  });

  const double gap_floor = tol.degenerate_rel * h.norm();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b)
      if (std::abs(ev[order[a]] - ev[order[b]]) < gap_floor)
        throw Error(Errc::degenerate_spectrum,
                    "biorthogonal_eig: eigenvalues closer than " + std::to_string(gap_floor));

  BiorthogonalEig out;
  out.eigenvalues.resize(n);
  out.right_kets.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.eigenvalues[j] = ev[order[j]];
    Eigen::VectorXcd v = ces.eigenvectors().col(order[j]);
    v.normalize();
    fix_phase(v);
    out.right_kets.col(j) = v;
  }

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(out.right_kets);
  if (!lu.isInvertible())
    throw Error(Errc::defective_matrix, "biorthogonal_eig: eigenvector matrix is singular");
  Eigen::MatrixXcd vinv = lu.inverse();
  const double cond = out.right_kets.norm() * vinv.norm();
  if (!(cond <= tol.kappa_max))
    throw Error(Errc::defective_matrix,
                "biorthogonal_eig: eigenvector condition estimate " + std::to_string(cond));
  out.left_bras = vinv.adjoint();
  return out;
}

Operator inverse(const Operator& m, const Tolerances& tol) {
  require_square(m, "inverse");
  require_finite(m, "inverse");
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
  if (!lu.isInvertible())
    throw Error(Errc::singular_matrix, "inverse: matrix is singular");
  Operator inv = lu.inverse();
  const double cond = m.norm() * inv.norm();
  if (!(cond <= tol.kappa_max))
    throw Error(Errc::singular_matrix, "inverse: condition estimate " + std::to_string(cond) +
                                           " exceeds ceiling");
  return inv;
}

}  // namespace nip
