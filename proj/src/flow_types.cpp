#include "nip/flow_types.hpp"

namespace nip {

long TimeGrid::n_steps() const {
  const double ratio = (t_end - t_start) / dt;
  return std::lround(ratio);
}

void TimeGrid::validate() const {
  if (!(dt > 0.0)) throw Error(Errc::config_error, "grid.dt: must be positive");
  if (!(t_end > t_start)) throw Error(Errc::config_error, "grid.t_end: must exceed grid.t_start");
  if (sample_stride < 1) throw Error(Errc::config_error, "grid.sample_stride: must be >= 1");
  const double ratio = (t_end - t_start) / dt;
  const double nearest = std::round(ratio);
  // Accept only when the step count is integral to within half an ulp.
  const double half_ulp =
      0.5 * (std::nextafter(std::abs(ratio), std::numeric_limits<double>::infinity()) - std::abs(ratio));
  if (std::abs(ratio - nearest) > half_ulp || nearest < 1.0)
    throw Error(Errc::config_error, "grid.dt: does not divide the interval (steps = " +
                                        std::to_string(ratio) + ")");
  if (n_steps() % sample_stride != 0)
    throw Error(Errc::config_error, "grid.sample_stride: must divide the step count");
}

GeneratorFunction GeneratorFunction::constant(const Operator& m) {
  GeneratorFunction g;
  g.dim = m.rows();
  g.eval = [m](double) { return m; };
  g.derivative = [n = m.rows()](double) { return Operator::Zero(n, n); };
  return g;
}

GeneratorFunction GeneratorFunction::zero(Eigen::Index dim) {
  return constant(Operator::Zero(dim, dim));
}

}  // namespace nip
