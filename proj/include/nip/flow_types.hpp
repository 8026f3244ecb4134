#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nip/types.hpp"

namespace nip {

/// Uniform integration grid. The step must divide the interval: the number
/// of steps is accepted only when (t_end - t_start)/dt lies within half an
/// ulp of an integer.
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
  long sample_stride = 1;

  long n_steps() const;
  long n_samples() const { return n_steps() / sample_stride + 1; }
  double time_at(long step) const { return t_start + static_cast<double>(step) * dt; }
  /// Spacing between stored samples.
  double sample_dt() const { return static_cast<double>(sample_stride) * dt; }
  void validate() const;
};

/// Time-parameterized operator source t -> Operator, optionally with an
/// analytic derivative registered by the scenario.
struct GeneratorFunction {
  Eigen::Index dim = 0;
  std::function<Operator(double)> eval;
  std::function<Operator(double)> derivative;  // optional

  Operator operator()(double t) const { return eval(t); }
  bool has_derivative() const { return static_cast<bool>(derivative); }

  static GeneratorFunction constant(const Operator& m);
  static GeneratorFunction zero(Eigen::Index dim);
};

/// Paired ket/bra N-plets. Columns are the members; member m of `bras` is
/// the vector whose adjoint acts as the bra, so biorthonormality reads
/// bras.adjoint() * kets = I.
struct BiorthogonalBasis {
  Eigen::MatrixXcd kets;
  Eigen::MatrixXcd bras;

  Eigen::Index dim() const { return kets.rows(); }
  Eigen::Index size() const { return kets.cols(); }
  Eigen::MatrixXcd gram() const { return bras.adjoint() * kets; }
  Eigen::MatrixXcd completeness() const { return kets * bras.adjoint(); }
};

/// Basis plus the conserved real energies E_n of the spectral form
/// H = sum_n |ket_n> E_n <bra_n|.
struct SpectralHamiltonian {
  BiorthogonalBasis basis;
  RealVector energies;
};

/// Time grid plus per-sample payloads and named scalar logs aligned with
/// the samples.
template <class PayloadT>
struct Trajectory {
  TimeGrid grid;
  std::vector<double> times;
  std::vector<PayloadT> samples;
  std::map<std::string, std::vector<double>> logs;

  const PayloadT& front() const { return samples.front(); }
  const PayloadT& back() const { return samples.back(); }
  size_t size() const { return samples.size(); }
};

/// Fourth-order central difference over the stencil {t +- h, t +- 2h}.
inline Operator central_derivative(const std::function<Operator(double)>& f, double t, double h) {
  return (-f(t + 2 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2 * h)) / (12.0 * h);
}

}  // namespace nip
