#include "nip/scenario.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace nip {

using nlohmann::json;

// ---------------------------------------------------------------------------
// checks
// ---------------------------------------------------------------------------

bool ChecksConfig::enabled(const std::string& name) const {
  auto it = items.find(name);
  return it != items.end() && it->second.enabled;
}

double ChecksConfig::tol(const std::string& name) const {
  auto it = items.find(name);
  if (it == items.end())
    throw Error(Errc::config_error, "checks." + name + ": unknown check");
  return it->second.tol;
}

void ChecksConfig::enable_all() {
  for (auto& [name, setting] : items) setting.enabled = true;
}

ChecksConfig default_checks(bool kg) {
  ChecksConfig c;
  c.items["overlap_drift"] = {true, 1e-9};
  c.items["gram_dev"] = {true, 1e-6};
  c.items["completeness_dev"] = {true, 1e-6};
  c.items["qh_h"] = {true, 1e-8};
  c.items["qh_q"] = {true, 1e-8};
  c.items["flow_g"] = {true, 1e-6};
  c.items["flow_sigma"] = {true, 1e-6};
  c.items["htilde"] = {true, 1e-6};
  c.items["omega_theta"] = {true, 1e-7};
  c.items["h_eig_drift"] = {true, 1e-8};
  c.items["q_eig_drift"] = {true, 1e-8};
  if (kg) {
    c.items["krein_drift"] = {true, 1e-9};
    c.items["kg_residual"] = {true, 1e-4};
  }
  c.items["cross_deviation"] = {false, 1e-7};
  return c;
}

// ---------------------------------------------------------------------------
// json helpers
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void cfg_fail(const std::string& path, const std::string& msg) {
  throw Error(Errc::config_error, path + ": " + msg);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) cfg_fail(path + "." + key, "missing");
  return *it;
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) cfg_fail(path, "expected a number");
  return j.get<double>();
}

long as_long(const json& j, const std::string& path) {
  if (!j.is_number_integer()) cfg_fail(path, "expected an integer");
  return j.get<long>();
}

Complex as_complex(const json& j, const std::string& path) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  cfg_fail(path, "expected a number or [re, im]");
}

Eigen::VectorXcd as_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) cfg_fail(path, "expected a non-empty array");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (size_t k = 0; k < j.size(); ++k)
    v[static_cast<Eigen::Index>(k)] = as_complex(j[k], path + "[" + std::to_string(k) + "]");
  return v;
}

Eigen::MatrixXcd as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) cfg_fail(path, "expected a non-empty array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  Eigen::MatrixXcd m;
  for (size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    const std::string rpath = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || row.empty()) cfg_fail(rpath, "expected a row array");
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      cfg_fail(rpath, "ragged matrix");
    }
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_complex(row[c], rpath + "[" + std::to_string(c) + "]");
  }
  return m;
}

/// Columns of the matrix are the listed vectors.
Eigen::MatrixXcd as_vector_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) cfg_fail(path, "expected a non-empty array of vectors");
  Eigen::VectorXcd first = as_vector(j[0], path + "[0]");
  Eigen::MatrixXcd m(first.size(), static_cast<Eigen::Index>(j.size()));
  m.col(0) = first;
  for (size_t k = 1; k < j.size(); ++k) {
    Eigen::VectorXcd v = as_vector(j[k], path + "[" + std::to_string(k) + "]");
    if (v.size() != m.rows()) cfg_fail(path, "vectors have unequal lengths");
    m.col(static_cast<Eigen::Index>(k)) = v;
  }
  return m;
}

MatrixExpr as_matrix_expr(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) cfg_fail(path, "expected an array of expression rows");
  std::vector<std::vector<std::string>> entries;
  for (size_t r = 0; r < j.size(); ++r) {
    const json& row = j[r];
    const std::string rpath = path + "[" + std::to_string(r) + "]";
    if (!row.is_array()) cfg_fail(rpath, "expected a row array");
    std::vector<std::string> cells;
    for (size_t c = 0; c < row.size(); ++c) {
      const json& cell = row[c];
      if (cell.is_string())
        cells.push_back(cell.get<std::string>());
      else if (cell.is_number())
        cells.push_back(std::to_string(cell.get<double>()));
      else
        cfg_fail(rpath + "[" + std::to_string(c) + "]", "expected an expression string");
    }
    entries.push_back(std::move(cells));
  }
  return MatrixExpr::parse(entries);
}

}  // namespace

// ---------------------------------------------------------------------------
// lattice and registry models
// ---------------------------------------------------------------------------

LatticeModel make_lattice(Eigen::Index n_sites, double dx, const MassSpec& mass) {
  LatticeModel model;
  model.n_sites = n_sites;
  model.dx = dx;
  model.mass_sq_fn = [mass, dx](Eigen::Index j, double t) -> Complex {
    double profile = 1.0;
    if (mass.shape == MassSpec::Shape::gaussian) {
      const double x = (static_cast<double>(j) + 1.0) * dx;
      const double arg = (x - mass.center) / mass.width;
      profile = std::exp(-arg * arg);
    }
    return Complex(mass.mu0 + mass.mu1 * profile * std::sin(mass.nu * t), mass.gamma);
  };
  return model;
}

DrivenToy make_driven_toy() {
  const double rot = 0.6;
  const double c = std::cos(rot), s = std::sin(rot);
  Operator rmat(2, 2);
  rmat << c, s, -s, c;
  const Operator rdag = rmat.adjoint();

  auto a_of = [](double t) { return std::exp(0.3 * std::sin(t)); };
  auto b_of = [](double t) { return 2.0 * std::exp(0.25 * std::cos(2.0 * t)); };
  auto da_of = [a_of](double t) { return 0.3 * std::cos(t) * a_of(t); };
  auto db_of = [b_of](double t) { return -0.5 * std::sin(2.0 * t) * b_of(t); };

  auto theta_diag = [a_of, b_of](double t) -> Operator {
    Operator d = Operator::Zero(2, 2);
    d(0, 0) = a_of(t);
    d(1, 1) = b_of(t);
    return d;
  };
  auto theta_diag_dot = [da_of, db_of](double t) -> Operator {
    Operator d = Operator::Zero(2, 2);
    d(0, 0) = da_of(t);
    d(1, 1) = db_of(t);
    return d;
  };

  Operator sigma_x(2, 2);
  sigma_x << 0, 1, 1, 0;
  Operator sigma_z(2, 2);
  sigma_z << 1, 0, 0, -1;

  DrivenToy toy;
  toy.omega_fn.dim = 2;
  toy.omega_fn.eval = [theta_diag, rmat](double t) -> Operator { return theta_diag(t) * rmat; };
  toy.omega_fn.derivative = [theta_diag_dot, rmat](double t) -> Operator {
    return theta_diag_dot(t) * rmat;
  };

  toy.h_fn = GeneratorFunction::constant(sigma_x);

  toy.sigma_fn.dim = 2;
  toy.sigma_fn.eval = [theta_diag, theta_diag_dot, rmat, rdag](double t) -> Operator {
    Operator ratio = Operator::Zero(2, 2);  // theta^-1 theta_dot
    ratio(0, 0) = theta_diag_dot(t)(0, 0) / theta_diag(t)(0, 0);
    ratio(1, 1) = theta_diag_dot(t)(1, 1) / theta_diag(t)(1, 1);
    return imag_unit * rdag * ratio * rmat;
  };

  toy.h_obs_fn.dim = 2;
  toy.h_obs_fn.eval = [a_of, b_of, rmat, rdag, sigma_x](double t) -> Operator {
    Operator m = Operator::Zero(2, 2);  // theta^-1 sigma_x theta
    m(0, 1) = b_of(t) / a_of(t);
    m(1, 0) = a_of(t) / b_of(t);
    return rdag * m * rmat;
  };

  toy.g_fn.dim = 2;
  toy.g_fn.eval = [h = toy.h_obs_fn.eval, sg = toy.sigma_fn.eval](double t) -> Operator {
    return h(t) - sg(t);
  };

  const Operator omega0 = toy.omega_fn(0.0);
  const Operator omega0_inv = rdag * theta_diag(0.0).inverse();

  Eigen::MatrixXcd textbook_basis(2, 2);  // eigenvectors of sigma_x, ascending E
  textbook_basis.col(0) = (Eigen::VectorXcd(2) << 1.0, -1.0).finished() / std::sqrt(2.0);
  textbook_basis.col(1) = (Eigen::VectorXcd(2) << 1.0, 1.0).finished() / std::sqrt(2.0);

  toy.basis0.kets = omega0_inv * textbook_basis;
  toy.basis0.bras = omega0.adjoint() * textbook_basis;
  toy.energies = (RealVector(2) << -1.0, 1.0).finished();

  toy.psi_T0 = (Eigen::VectorXcd(2) << 0.6, 0.8).finished();
  toy.psi0 = omega0_inv * toy.psi_T0;
  toy.psi_theta0 = omega0.adjoint() * toy.psi_T0;
  toy.q_T = sigma_z;
  toy.q0 = omega0_inv * sigma_z * omega0;

  toy.exact_psi = [omega_eval = toy.omega_fn.eval, rdag, theta_diag, sigma_x,
                   psi_T0 = toy.psi_T0](double t) -> StateVector {
    Operator theta_inv = Operator::Zero(2, 2);
    const Operator th = theta_diag(t);
    theta_inv(0, 0) = 1.0 / th(0, 0);
    theta_inv(1, 1) = 1.0 / th(1, 1);
    const Operator propagator =
        std::cos(t) * Operator::Identity(2, 2) - imag_unit * std::sin(t) * sigma_x;
    return rdag * theta_inv * propagator * psi_T0;
  };
  return toy;
}

// ---------------------------------------------------------------------------
// scenario loading
// ---------------------------------------------------------------------------

namespace {

GeneratorFunction generator_from_expr(MatrixExpr expr, std::optional<Operator> frame,
                                      const Tolerances& tol) {
  if (expr.rows() != expr.cols())
    throw Error(Errc::config_error, "model.generator: must be square");
  GeneratorFunction fn;
  fn.dim = expr.rows();
  if (frame) {
    const Operator f = *frame;
    if (f.rows() != expr.rows() || f.cols() != expr.cols())
      throw Error(Errc::config_error, "model.frame: dimension mismatch with generator");
    const double unit_dev =
        (f.adjoint() * f - Operator::Identity(f.rows(), f.cols())).norm();
    if (unit_dev > tol.herm_rel * std::sqrt(static_cast<double>(f.rows())))
      throw Error(Errc::config_error, "model.frame: matrix is not unitary");
    fn.eval = [expr = std::move(expr), f](double t) -> Operator {
      return f.adjoint() * expr.eval(t) * f;
    };
  } else {
    fn.eval = [expr = std::move(expr)](double t) -> Operator { return expr.eval(t); };
  }
  return fn;
}

void load_checks(const json& root, ChecksConfig& checks) {
  if (!root.contains("checks")) return;
  const json& j = root["checks"];
  if (!j.is_object()) cfg_fail("checks", "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto found = checks.items.find(it.key());
    if (found == checks.items.end()) cfg_fail("checks." + it.key(), "unknown check");
    const json& v = it.value();
    if (v.is_boolean()) {
      found->second.enabled = v.get<bool>();
    } else if (v.is_object()) {
      if (v.contains("enabled")) found->second.enabled = v["enabled"].get<bool>();
      if (v.contains("tol")) {
        const double tol = as_double(v["tol"], "checks." + it.key() + ".tol");
        if (!(tol > 0.0)) cfg_fail("checks." + it.key() + ".tol", "must be positive");
        found->second.tol = tol;
      }
    } else {
      cfg_fail("checks." + it.key(), "expected bool or {enabled, tol}");
    }
  }
}

void load_tolerances(const json& root, Tolerances& tol) {
  if (!root.contains("tolerances")) return;
  const json& j = root["tolerances"];
  auto grab = [&](const char* key, double& slot) {
    if (j.contains(key)) {
      slot = as_double(j[key], std::string("tolerances.") + key);
      if (!(slot > 0.0)) cfg_fail(std::string("tolerances.") + key, "must be positive");
    }
  };
  grab("herm_rel", tol.herm_rel);
  grab("pd_rel", tol.pd_rel);
  grab("kappa_max", tol.kappa_max);
  grab("degenerate_rel", tol.degenerate_rel);
  grab("basis_dev", tol.basis_dev);
}

}  // namespace

PreparedScenario load_scenario_text(const std::string& json_text,
                                    const std::string& fallback_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, std::string("cannot parse config: ") + e.what());
  }

  PreparedScenario sc;
  sc.name = root.value("name", fallback_name);

  load_tolerances(root, sc.tol);

  // --- grid ---
  const json& jgrid = field(root, "grid", "");
  sc.grid.t_start = jgrid.contains("t_start") ? as_double(jgrid["t_start"], "grid.t_start") : 0.0;
  sc.grid.t_end = as_double(field(jgrid, "t_end", "grid"), "grid.t_end");
  sc.grid.dt = as_double(field(jgrid, "dt", "grid"), "grid.dt");
  sc.grid.sample_stride = 1;
  if (root.contains("outputs")) {
    const json& jout = root["outputs"];
    if (jout.contains("sample_stride"))
      sc.grid.sample_stride = as_long(jout["sample_stride"], "outputs.sample_stride");
    if (jout.contains("dir")) sc.out_dir_hint = jout["dir"].get<std::string>();
  }
  sc.grid.validate();

  // --- gauge ---
  if (root.contains("gauge")) {
    const std::string g = root["gauge"].get<std::string>();
    if (g == "identity_v")
      sc.gauge = Gauge::identity_v;
    else if (g == "sqrt_theta")
      sc.gauge = Gauge::sqrt_theta;
    else
      cfg_fail("gauge", "expected identity_v or sqrt_theta");
  }

  // --- model ---
  const json& jmodel = field(root, "model", "");
  const std::string type = field(jmodel, "type", "model").get<std::string>();
  std::optional<DrivenToy> registry_toy;

  if (type == "toy2x2") {
    if (jmodel.contains("registry")) {
      const std::string entry = jmodel["registry"].get<std::string>();
      if (entry == "driven_v1")
        registry_toy = make_driven_toy();
      else
        cfg_fail("model.registry", "unknown entry '" + entry + "'");
      sc.g_fn = registry_toy->g_fn;
    } else {
      MatrixExpr gen = as_matrix_expr(field(jmodel, "generator", "model"), "model.generator");
      std::optional<Operator> frame;
      if (jmodel.contains("frame")) frame = as_matrix(jmodel["frame"], "model.frame");
      sc.g_fn = generator_from_expr(std::move(gen), frame, sc.tol);
    }
  } else if (type == "kg_lattice") {
    const Eigen::Index n = as_long(field(jmodel, "n_sites", "model"), "model.n_sites");
    const double dx = as_double(field(jmodel, "dx", "model"), "model.dx");
    if (n < 1) cfg_fail("model.n_sites", "must be >= 1");
    if (!(dx > 0.0)) cfg_fail("model.dx", "must be positive");
    MassSpec mass;
    const json& jm = field(jmodel, "mass_sq", "model");
    mass.mu0 = jm.contains("mu0") ? as_double(jm["mu0"], "model.mass_sq.mu0") : 0.0;
    mass.mu1 = jm.contains("mu1") ? as_double(jm["mu1"], "model.mass_sq.mu1") : 0.0;
    mass.nu = jm.contains("nu") ? as_double(jm["nu"], "model.mass_sq.nu") : 0.0;
    if (jm.contains("profile")) {
      const std::string p = jm["profile"].get<std::string>();
      if (p == "uniform")
        mass.shape = MassSpec::Shape::uniform;
      else if (p == "gaussian")
        mass.shape = MassSpec::Shape::gaussian;
      else
        cfg_fail("model.mass_sq.profile", "expected uniform or gaussian");
    }
    if (jm.contains("center")) mass.center = as_double(jm["center"], "model.mass_sq.center");
    if (jm.contains("width")) {
      mass.width = as_double(jm["width"], "model.mass_sq.width");
      if (!(mass.width > 0.0)) cfg_fail("model.mass_sq.width", "must be positive");
    }
    if (jm.contains("gamma")) mass.gamma = as_double(jm["gamma"], "model.mass_sq.gamma");
    const bool allow_complex = jmodel.value("allow_complex_mass", false);
    if (mass.gamma != 0.0 && !allow_complex)
      cfg_fail("model.mass_sq.gamma", "complex mass requires model.allow_complex_mass = true");

    sc.lattice = make_lattice(n, dx, mass);
    sc.g_fn.dim = 2 * n;
    sc.g_fn.eval = [model = *sc.lattice](double t) -> Operator {
      return build_fv_generator(build_lattice_d(model, t));
    };
  } else {
    cfg_fail("model.type", "expected toy2x2 or kg_lattice");
  }

  sc.checks = default_checks(sc.is_kg());
  load_checks(root, sc.checks);

  // --- energies override ---
  std::optional<RealVector> energies_override;
  if (root.contains("energies")) {
    const json& je = root["energies"];
    if (!je.is_array() || je.empty()) cfg_fail("energies", "expected a non-empty array");
    RealVector e(static_cast<Eigen::Index>(je.size()));
    for (size_t k = 0; k < je.size(); ++k)
      e[static_cast<Eigen::Index>(k)] = as_double(je[k], "energies[" + std::to_string(k) + "]");
    energies_override = e;
  }

  const json jinitial = root.contains("initial") ? root["initial"] : json::object();

  // --- basis ---
  if (sc.is_kg()) {
    sc.kg_energies_override = energies_override;
  } else {
    bool basis_set = false;
    if (jinitial.contains("basis") && jinitial["basis"].is_object()) {
      const json& jb = jinitial["basis"];
      sc.basis0.kets = as_vector_list(field(jb, "kets", "initial.basis"), "initial.basis.kets");
      sc.basis0.bras = as_vector_list(field(jb, "bras", "initial.basis"), "initial.basis.bras");
      basis_set = true;
    } else if (registry_toy && (!jinitial.contains("basis") ||
                                jinitial["basis"].get<std::string>() == "registry")) {
      sc.basis0 = registry_toy->basis0;
      sc.energies = registry_toy->energies;
      basis_set = true;
    } else {
      const std::string mode =
          jinitial.contains("basis") ? jinitial["basis"].get<std::string>() : "auto_eigenbasis";
      if (mode != "auto_eigenbasis") cfg_fail("initial.basis", "unknown mode '" + mode + "'");
      const BiorthogonalEig eig = biorthogonal_eig(sc.g_fn(sc.grid.t_start), sc.tol);
      sc.basis0.kets = eig.right_kets;
      sc.basis0.bras = eig.left_bras;
      if (!energies_override) {
        const double imag_norm = eig.eigenvalues.imag().norm();
        if (imag_norm > sc.tol.herm_rel * std::max(1.0, eig.eigenvalues.norm()))
          cfg_fail("energies",
                   "generator spectrum is complex at t_start; supply real energies explicitly");
        sc.energies = eig.eigenvalues.real();
      }
      basis_set = true;
    }
    if (!basis_set) cfg_fail("initial.basis", "could not assemble a basis");
    if (energies_override) sc.energies = *energies_override;
    if (sc.energies.size() != sc.basis0.size())
      cfg_fail("energies", "count does not match the basis size");
    if (sc.basis0.kets.rows() != sc.g_fn.dim || sc.basis0.size() != sc.g_fn.dim)
      cfg_fail("initial.basis", "basis must hold dim members of dimension dim");
  }

  // --- state ---
  if (sc.is_kg()) {
    int mode_index = 1;
    if (jinitial.contains("state")) {
      const json& js = jinitial["state"];
      if (js.is_object() && js.contains("kg_mode")) {
        mode_index = static_cast<int>(as_long(js["kg_mode"], "initial.state.kg_mode"));
      } else if (js.is_object() && js.contains("psi") && js.contains("dpsi_dt")) {
        const Eigen::VectorXcd psi = as_vector(js["psi"], "initial.state.psi");
        const Eigen::VectorXcd dpsi = as_vector(js["dpsi_dt"], "initial.state.dpsi_dt");
        if (psi.size() != sc.lattice->n_sites || dpsi.size() != sc.lattice->n_sites)
          cfg_fail("initial.state", "component lengths must equal n_sites");
        sc.kg_initial = fv_pack(psi, dpsi);
      } else {
        cfg_fail("initial.state", "expected {kg_mode} or {psi, dpsi_dt}");
      }
    }
    if (!sc.kg_initial)
      sc.kg_initial = kg_plane_wave_mode(*sc.lattice, mode_index, sc.grid.t_start);
  } else {
    bool have_state = false;
    if (jinitial.contains("state")) {
      const json& js = jinitial["state"];
      if (js.is_string() && js.get<std::string>() == "registry" && registry_toy) {
        sc.psi0 = registry_toy->psi0;
        sc.psi_theta0 = registry_toy->psi_theta0;
        have_state = true;
      } else if (js.is_object() && js.contains("basis_member")) {
        const long k = as_long(js["basis_member"], "initial.state.basis_member");
        if (k < 0 || k >= sc.basis0.size()) cfg_fail("initial.state.basis_member", "out of range");
        sc.psi0 = sc.basis0.kets.col(k);
        sc.psi_theta0 = sc.basis0.bras.col(k);
        have_state = true;
      } else if (js.is_object() && js.contains("ket")) {
        sc.psi0 = as_vector(js["ket"], "initial.state.ket");
        if (sc.psi0.size() != sc.g_fn.dim) cfg_fail("initial.state.ket", "length must equal dim");
        if (js.contains("bra") && js["bra"].is_array()) {
          sc.psi_theta0 = as_vector(js["bra"], "initial.state.bra");
          if (sc.psi_theta0.size() != sc.g_fn.dim)
            cfg_fail("initial.state.bra", "length must equal dim");
        } else {
          // "from_theta" or omitted: dress the ket with the initial metric.
          sc.psi_theta0 =
              metric_from_basis(Eigen::MatrixXcd(sc.basis0.bras), sc.tol) * sc.psi0;
        }
        have_state = true;
      } else {
        cfg_fail("initial.state", "unrecognized state spec");
      }
    }
    if (!have_state) {
      if (registry_toy) {
        sc.psi0 = registry_toy->psi0;
        sc.psi_theta0 = registry_toy->psi_theta0;
      } else {
        sc.psi0 = sc.basis0.kets.col(0);
        sc.psi_theta0 = sc.basis0.bras.col(0);
      }
    }
  }

  // --- observable ---
  if (!sc.is_kg()) {
    if (jinitial.contains("observable") && jinitial["observable"].is_array()) {
      sc.q0 = as_matrix(jinitial["observable"], "initial.observable");
      if (sc.q0.rows() != sc.g_fn.dim || sc.q0.cols() != sc.g_fn.dim)
        cfg_fail("initial.observable", "must be dim x dim");
    } else if (registry_toy && (!jinitial.contains("observable") ||
                                jinitial["observable"].get<std::string>() == "registry")) {
      sc.q0 = registry_toy->q0;
    } else {
      const std::string mode = jinitial.contains("observable")
                                   ? jinitial["observable"].get<std::string>()
                                   : "hamiltonian";
      if (mode != "hamiltonian") cfg_fail("initial.observable", "unknown mode '" + mode + "'");
      sc.q0 = hamiltonian_from_spectral(SpectralHamiltonian{sc.basis0, sc.energies});
    }
  } else if (jinitial.contains("observable") && jinitial["observable"].is_array()) {
    sc.q0 = as_matrix(jinitial["observable"], "initial.observable");
    if (sc.q0.rows() != sc.g_fn.dim) cfg_fail("initial.observable", "must be 2n x 2n");
  }

  // --- cross section ---
  if (root.contains("cross")) {
    const json& jc = root["cross"];
    PreparedScenario::Cross cross;
    if (jc.is_string() && jc.get<std::string>() == "registry") {
      if (!registry_toy) cfg_fail("cross", "registry cross requires a registry model");
      cross.omega_fn = registry_toy->omega_fn;
      cross.h_fn = registry_toy->h_fn;
      cross.q_T = registry_toy->q_T;
      cross.psi_T0 = registry_toy->psi_T0;
    } else {
      MatrixExpr omega = as_matrix_expr(field(jc, "omega", "cross"), "cross.omega");
      if (omega.rows() != omega.cols()) cfg_fail("cross.omega", "must be square");
      cross.omega_fn.dim = omega.rows();
      cross.omega_fn.eval = [omega](double t) -> Operator { return omega.eval(t); };
      if (jc.contains("omega_dot")) {
        MatrixExpr omega_dot = as_matrix_expr(jc["omega_dot"], "cross.omega_dot");
        cross.omega_fn.derivative = [omega_dot](double t) -> Operator {
          return omega_dot.eval(t);
        };
      }
      MatrixExpr h = as_matrix_expr(field(jc, "h", "cross"), "cross.h");
      cross.h_fn.dim = h.rows();
      cross.h_fn.eval = [h](double t) -> Operator { return h.eval(t); };
      cross.q_T = as_matrix(field(jc, "q_T", "cross"), "cross.q_T");
      cross.psi_T0 = as_vector(field(jc, "psi_T0", "cross"), "cross.psi_T0");
      if (cross.h_fn.dim != cross.omega_fn.dim || cross.q_T.rows() != cross.omega_fn.dim ||
          cross.psi_T0.size() != cross.omega_fn.dim)
        cfg_fail("cross", "omega, h, q_T and psi_T0 dimensions disagree");
    }
    sc.cross = std::move(cross);
  }

  return sc;
}

PreparedScenario load_scenario(const std::filesystem::path& json_file) {
  std::ifstream in(json_file);
  if (!in) throw Error(Errc::config_error, "cannot open config file " + json_file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_scenario_text(text, json_file.stem().string());
}

}  // namespace nip
