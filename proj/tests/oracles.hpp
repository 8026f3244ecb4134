#pragma once

// Test-only reference machinery: independent of the library's solver paths.

#include <random>

#include "nip/types.hpp"

namespace oracles {

/// Dense matrix exponential by scaling-and-squaring over a plain Taylor
/// series; deliberately naive and independent of any propagator code.
inline nip::Operator expm(const nip::Operator& m) {
  int squarings = 0;
  nip::Operator scaled = m;
  while (scaled.norm() > 0.5 && squarings < 120) {
    scaled *= 0.5;
    ++squarings;
  }
  const Eigen::Index n = m.rows();
  nip::Operator sum = nip::Operator::Identity(n, n);
  nip::Operator term = nip::Operator::Identity(n, n);
  for (int k = 1; k <= 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    if (term.norm() < 1e-18 * sum.norm()) break;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

inline nip::Operator random_matrix(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  nip::Operator m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = nip::Complex(dist(rng), dist(rng));
  return m;
}

inline nip::Operator random_hermitian(Eigen::Index n, unsigned seed) {
  nip::Operator m = random_matrix(n, seed);
  return nip::Operator(0.5 * (m + m.adjoint()));
}

inline nip::Operator random_hermitian_pd(Eigen::Index n, unsigned seed) {
  nip::Operator m = random_matrix(n, seed);
  return nip::Operator(m * m.adjoint() +
                       static_cast<double>(n) * nip::Operator::Identity(n, n));
}

inline nip::Operator random_unitary(Eigen::Index n, unsigned seed) {
  Eigen::HouseholderQR<nip::Operator> qr(random_matrix(n, seed));
  return qr.householderQ() * nip::Operator::Identity(n, n);
}

inline Eigen::VectorXcd random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXcd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = nip::Complex(dist(rng), dist(rng));
  return v;
}

}  // namespace oracles
