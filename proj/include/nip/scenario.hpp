#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "nip/evolution_engine.hpp"
#include "nip/expr.hpp"
#include "nip/klein_gordon.hpp"

namespace nip {

struct CheckSetting {
  bool enabled = true;
  double tol = 0.0;
};

/// Named residual checks with their tolerances; populated with defaults at
/// load time, individually overridable from the config file.
struct ChecksConfig {
  std::map<std::string, CheckSetting> items;

  bool enabled(const std::string& name) const;
  double tol(const std::string& name) const;
  void enable_all();
};

ChecksConfig default_checks(bool kg);

/// A scenario parsed, validated and assembled into runnable objects.
struct PreparedScenario {
  std::string name;
  TimeGrid grid;
  Gauge gauge = Gauge::identity_v;
  Tolerances tol{};
  ChecksConfig checks;
  std::string out_dir_hint;

  GeneratorFunction g_fn;
  BiorthogonalBasis basis0;
  RealVector energies;
  StateVector psi0;
  DualStateVector psi_theta0;
  Operator q0;

  std::optional<LatticeModel> lattice;
  std::optional<FvState> kg_initial;
  std::optional<RealVector> kg_energies_override;

  struct Cross {
    GeneratorFunction omega_fn;
    GeneratorFunction h_fn;
    Operator q_T;
    StateVector psi_T0;
  };
  std::optional<Cross> cross;

  bool is_kg() const { return lattice.has_value(); }
};

PreparedScenario load_scenario(const std::filesystem::path& json_file);
PreparedScenario load_scenario_text(const std::string& json_text,
                                    const std::string& fallback_name = "scenario");

/// Site- and time-dependent mass-squared profile
/// m^2(x_j, t) = mu0 + mu1 * p(x_j) * sin(nu t) + i gamma.
struct MassSpec {
  double mu0 = 1.0;
  double mu1 = 0.0;
  double nu = 0.0;
  enum class Shape { uniform, gaussian } shape = Shape::uniform;
  double center = 0.0;
  double width = 1.0;
  double gamma = 0.0;
};

LatticeModel make_lattice(Eigen::Index n_sites, double dx, const MassSpec& mass);

/// Built-in driven two-level model: Omega(t) = diag(a(t), b(t)) * R with
/// a = exp(0.3 sin t), b = 2 exp(0.25 cos 2t), R a fixed rotation, and the
/// textbook Hamiltonian sigma_x. Everything needed for a run plus the
/// analytic companions used by tests.
struct DrivenToy {
  GeneratorFunction g_fn;
  GeneratorFunction omega_fn;  // with analytic derivative
  GeneratorFunction h_fn;      // constant sigma_x
  GeneratorFunction sigma_fn;  // analytic Coriolis generator
  GeneratorFunction h_obs_fn;  // analytic observable Hamiltonian H(t)
  BiorthogonalBasis basis0;
  RealVector energies;
  StateVector psi0;
  DualStateVector psi_theta0;
  Operator q0;
  Operator q_T;
  StateVector psi_T0;
  std::function<StateVector(double)> exact_psi;  // closed-form ket trajectory
};

DrivenToy make_driven_toy();

}  // namespace nip
