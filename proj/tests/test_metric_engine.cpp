#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nip/evolution_engine.hpp"
#include "nip/metric_engine.hpp"
#include "nip/scenario.hpp"
#include "oracles.hpp"

using namespace nip;

namespace {

template <class Fn>
Errc thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::config_error;
}

Operator mat2(Complex a, Complex b, Complex c, Complex d) {
  Operator m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("metric_from_basis") {
  // standard basis gives the identity metric
  std::vector<DualStateVector> std_bras = {(Eigen::VectorXcd(2) << 1, 0).finished(),
                                           (Eigen::VectorXcd(2) << 0, 1).finished()};
  CHECK(metric_from_basis(std_bras).isApprox(Operator::Identity(2, 2)));

  // sum of two outer products by hand
  std::vector<DualStateVector> bras = {(Eigen::VectorXcd(2) << 1, 0).finished(),
                                       (Eigen::VectorXcd(2) << 1, 1).finished()};
  CHECK(metric_from_basis(bras).isApprox(mat2(2, 1, 1, 1)));

  // an incomplete set cannot produce an invertible metric
  std::vector<DualStateVector> short_set = {(Eigen::VectorXcd(2) << 1, 0).finished()};
  CHECK(thrown_code([&] { metric_from_basis(short_set); }) == Errc::rank_deficient);

  // exactly Hermitian by construction
  Eigen::MatrixXcd cols = oracles::random_matrix(6, 3);
  const Operator theta = metric_from_basis(cols);
  CHECK((theta - theta.adjoint()).norm() == 0.0);
}

TEST_CASE("check_quasi_hermiticity") {
  // Hermitian observable in the trivial metric
  const Operator a = oracles::random_hermitian(3, 5);
  CHECK(check_quasi_hermiticity(a, Operator::Identity(3, 3)) < 1e-15);

  // hand check: A^dag Theta = Theta A = [[0,4],[4,0]]
  CHECK(check_quasi_hermiticity(mat2(0, 1, 4, 0), mat2(4, 0, 0, 1)) < 1e-15);

  // the nilpotent shift against the flat metric: defect [[0,-1],[1,0]],
  // Frobenius norms give sqrt(2) / 1
  const double r = check_quasi_hermiticity(mat2(0, 1, 0, 0), Operator::Identity(2, 2));
  CHECK(r == doctest::Approx(std::sqrt(2.0)));

  CHECK(thrown_code([&] {
          check_quasi_hermiticity(mat2(0, 1, 0, 0), Operator::Identity(3, 3));
        }) == Errc::dimension_mismatch);
}

TEST_CASE("dyson_factorize identity and diagonal cases") {
  const MetricDecomposition triv = dyson_factorize(Operator::Identity(2, 2));
  CHECK(triv.omega.isApprox(Operator::Identity(2, 2)));

  // ascending eigenvalue order puts theta = diag(1, 2)
  const MetricDecomposition dec = dyson_factorize(mat2(4, 0, 0, 1));
  CHECK(dec.sqrt_diag.isApprox(mat2(1, 0, 0, 2)));
  CHECK((dec.omega.adjoint() * dec.omega - mat2(4, 0, 0, 1)).norm() < 1e-13);
}

TEST_CASE("dyson_factorize contracts on random metrics") {
  const Operator theta = oracles::random_hermitian_pd(5, 17);
  const MetricDecomposition dec = dyson_factorize(theta);
  CHECK((dec.omega.adjoint() * dec.omega - theta).norm() < 1e-11 * theta.norm());
  CHECK((dec.u_unitary.adjoint() * dec.u_unitary - Operator::Identity(5, 5)).norm() < 1e-12);
  for (Eigen::Index k = 0; k < 5; ++k) CHECK(dec.sqrt_diag(k, k).real() > 0.0);

  // sqrt gauge: Omega is the Hermitian positive square root
  const MetricDecomposition sq = dyson_factorize(theta, Gauge::sqrt_theta);
  CHECK((sq.omega - sq.omega.adjoint()).norm() < 1e-11);
  CHECK((sq.omega * sq.omega - theta).norm() < 1e-11 * theta.norm());
  CHECK((sq.omega - positive_sqrt(theta)).norm() < 1e-11 * theta.norm());

  // the V ambiguity never leaks into Theta, so predictions agree exactly
  const Operator v1 = oracles::random_unitary(5, 18);
  const Operator v2 = oracles::random_unitary(5, 19);
  const Operator t1 = dyson_factorize(theta, v1).omega.adjoint() * dyson_factorize(theta, v1).omega;
  const Operator t2 = dyson_factorize(theta, v2).omega.adjoint() * dyson_factorize(theta, v2).omega;
  CHECK((t1 - t2).norm() < 1e-13 * theta.norm());

  CHECK(thrown_code([&] { dyson_factorize(theta, Operator(2.0 * v1)); }) == Errc::not_unitary);
  CHECK(thrown_code([] { dyson_factorize(mat2(1, 0, 0, -1)); }) == Errc::not_positive_definite);
}

TEST_CASE("coriolis_from_dyson") {
  // Omega(t) = I for all t
  GeneratorFunction constant = GeneratorFunction::constant(Operator::Identity(2, 2));
  CHECK(coriolis_from_dyson(constant, 0.3, 1e-2).norm() < 1e-12);

  // Omega(t) = exp(a t) I: Sigma = i a I with O(h^4) stencil error
  const double a = 0.7;
  GeneratorFunction growing;
  growing.dim = 2;
  growing.eval = [a](double t) -> Operator {
    return std::exp(a * t) * Operator::Identity(2, 2);
  };
  const Operator sigma = coriolis_from_dyson(growing, 0.4, 1e-2);
  CHECK((sigma - imag_unit * a * Operator::Identity(2, 2)).norm() < 1e-7);

  // Omega(t) = diag(1, e^{i w t}): Sigma = diag(0, -w)
  const double w = 1.3;
  GeneratorFunction phase;
  phase.dim = 2;
  phase.eval = [w](double t) -> Operator {
    Operator m = Operator::Identity(2, 2);
    m(1, 1) = std::exp(imag_unit * w * t);
    return m;
  };
  const Operator sigma_phase = coriolis_from_dyson(phase, 0.2, 1e-2);
  CHECK((sigma_phase - mat2(0, 0, 0, -w)).norm() < 1e-7);

  // registered analytic derivative takes precedence over the stencil
  phase.derivative = [w](double t) -> Operator {
    Operator m = Operator::Zero(2, 2);
    m(1, 1) = imag_unit * w * std::exp(imag_unit * w * t);
    return m;
  };
  CHECK((coriolis_from_dyson(phase, 0.2, 1e-2) - mat2(0, 0, 0, -w)).norm() < 1e-13);
}

TEST_CASE("hamiltonian_from_spectral") {
  SpectralHamiltonian spec;
  spec.basis.kets = Operator::Identity(2, 2);
  spec.basis.bras = Operator::Identity(2, 2);
  spec.energies = (RealVector(2) << 1.0, 2.0).finished();
  CHECK(hamiltonian_from_spectral(spec).isApprox(mat2(1, 0, 0, 2)));

  // equal energies reproduce e * I through completeness
  const Operator g = oracles::random_matrix(4, 23);
  const BiorthogonalEig eig = biorthogonal_eig(g);
  SpectralHamiltonian flat{BiorthogonalBasis{eig.right_kets, eig.left_bras},
                           RealVector::Constant(4, 1.5)};
  CHECK((hamiltonian_from_spectral(flat) - 1.5 * Operator::Identity(4, 4)).norm() < 1e-10);

  // round trip through the eigensystem of a real-spectrum operator
  const Eigen::Index n = 3;
  const Operator d = oracles::random_hermitian_pd(n, 29);
  Operator h0 = Operator::Zero(2 * n, 2 * n);
  h0.topRightCorner(n, n) = d;
  h0.bottomLeftCorner(n, n) = Operator::Identity(n, n);
  const BiorthogonalEig fv = biorthogonal_eig(h0);
  SpectralHamiltonian round{BiorthogonalBasis{fv.right_kets, fv.left_bras},
                            fv.eigenvalues.real()};
  CHECK((hamiltonian_from_spectral(round) - h0).norm() < 1e-10 * h0.norm());

  // the spectral form is quasi-Hermitian against its own metric
  const Operator theta = metric_from_basis(Eigen::MatrixXcd(fv.left_bras));
  CHECK(check_quasi_hermiticity(hamiltonian_from_spectral(round), theta) < 1e-11);
}

TEST_CASE("metric flow residuals on closed forms") {
  GeneratorFunction theta_const = GeneratorFunction::constant(Operator::Identity(2, 2));

  // Hermitian Sigma with a static metric satisfies the identity
  GeneratorFunction sigma_herm = GeneratorFunction::constant(mat2(0, 1, 1, 0));
  CHECK(metric_flow_residual_sigma(theta_const, sigma_herm, 0.5, 1e-2) < 1e-13);

  // Sigma = i I: Theta Sigma - Sigma^dag Theta = 2i I, norm ratio 2
  GeneratorFunction sigma_anti = GeneratorFunction::constant(Operator(
      imag_unit * Operator::Identity(2, 2)));
  CHECK(metric_flow_residual_sigma(theta_const, sigma_anti, 0.5, 1e-2) ==
        doctest::Approx(2.0));

  // Hermitian constant G with flat metric
  GeneratorFunction g_herm = GeneratorFunction::constant(mat2(1, 2, 2, -1));
  CHECK(metric_flow_residual_g(theta_const, g_herm, 0.5, 1e-2) < 1e-13);

  // G = 0 freezes any metric
  GeneratorFunction theta_any = GeneratorFunction::constant(mat2(2, 1, 1, 1));
  CHECK(metric_flow_residual_g(theta_any, GeneratorFunction::zero(2), 0.1, 1e-2) == 0.0);
}

TEST_CASE("flow residual forms agree for generators tied by the spectral split") {
  // For the driven toy the observable Hamiltonian is exactly quasi-Hermitian
  // against Theta = Omega^dag Omega, so the Sigma-form and G-form residuals
  // may differ only by that (vanishing) defect.
  const DrivenToy toy = make_driven_toy();
  GeneratorFunction theta_fn;
  theta_fn.dim = 2;
  theta_fn.eval = [om = toy.omega_fn.eval](double t) -> Operator {
    const Operator w = om(t);
    return w.adjoint() * w;
  };
  for (double t : {0.3, 1.1, 2.7}) {
    const double r_sigma = metric_flow_residual_sigma(theta_fn, toy.sigma_fn, t, 1e-2);
    const double r_g = metric_flow_residual_g(theta_fn, toy.g_fn, t, 1e-2);
    const Operator h = toy.h_obs_fn(t);
    const Operator theta = theta_fn(t);
    const double qh_defect = (theta * h - h.adjoint() * theta).norm() / theta.norm();
    CHECK(std::abs(r_sigma - r_g) <= 10.0 * (qh_defect + 1e-15));
  }
}

TEST_CASE("solve_metric_ode trivial flows") {
  TimeGrid grid{0.0, 2.0, 1e-3, 100};

  // Hermitian generator keeps the flat metric flat
  GeneratorFunction g_herm = GeneratorFunction::constant(mat2(0.5, 1, 1, -0.5));
  const auto traj = solve_metric_ode(g_herm, Operator::Identity(2, 2), grid);
  for (const Operator& th : traj.samples)
    CHECK((th - Operator::Identity(2, 2)).norm() < 1e-10);

  // G = 0 freezes the metric exactly up to integrator noise
  const Operator theta0 = mat2(2, 1, 1, 1);
  const auto frozen = solve_metric_ode(GeneratorFunction::zero(2), theta0, grid);
  CHECK((frozen.samples.back() - theta0).norm() < 1e-14);

  CHECK(traj.logs.at("theta_min_eig").size() == traj.samples.size());
}

TEST_CASE("solve_metric_ode agrees with the propagated-basis route") {
  // cross-method oracle on the driven toy over T = 5 at dt = 1e-3
  const DrivenToy toy = make_driven_toy();
  TimeGrid grid{0.0, 5.0, 1e-3, 100};

  const Operator theta0 = metric_from_basis(Eigen::MatrixXcd(toy.basis0.bras));
  const auto ode = solve_metric_ode(toy.g_fn, theta0, grid);
  const auto basis = propagate_basis(toy.g_fn, toy.basis0, grid);

  double worst = 0.0;
  for (size_t i = 0; i < basis.samples.size(); ++i) {
    const Operator rebuilt = metric_from_basis(Eigen::MatrixXcd(basis.samples[i].bras));
    worst = std::max(worst, (ode.samples[i] - rebuilt).norm());
    // the per-step symmetrization leaves the iterate exactly Hermitian
    CHECK((ode.samples[i] - ode.samples[i].adjoint()).norm() == 0.0);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("solve_metric_ode input guards") {
  TimeGrid grid{0.0, 1.0, 1e-2, 10};
  CHECK(thrown_code([&] {
          solve_metric_ode(GeneratorFunction::zero(2), mat2(0, 1, 0, 0), grid);
        }) == Errc::non_hermitian_input);

  // a metric arriving at the positivity floor is reported as degenerated
  Operator nearly = Operator::Identity(2, 2);
  nearly(1, 1) = 1e-14;
  try {
    solve_metric_ode(GeneratorFunction::zero(2), nearly, grid);
    FAIL("expected MetricDegenerated");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::metric_degenerated);
    CHECK(e.has_time());
    CHECK(e.time() == doctest::Approx(0.0));
  }
}

TEST_CASE("factorization invariants hold across seeds") {
  for (unsigned seed = 200; seed < 210; ++seed) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed % 5);
    const Operator theta = oracles::random_hermitian_pd(n, seed);

    const MetricDecomposition dec = dyson_factorize(theta);
    CHECK((dec.omega.adjoint() * dec.omega - theta).norm() <= 1e-11 * theta.norm());
    CHECK((dec.omega - dec.v_unitary.adjoint() * dec.sqrt_diag * dec.u_unitary).norm() == 0.0);

    const MetricDecomposition sq = dyson_factorize(theta, Gauge::sqrt_theta);
    CHECK((sq.omega * sq.omega - theta).norm() <= 1e-11 * theta.norm());
    CHECK((sq.omega - sq.omega.adjoint()).norm() <= 1e-11 * theta.norm());

    // metric_from_basis of any spanning set is Hermitian positive definite
    const Eigen::MatrixXcd cols = oracles::random_matrix(n, seed + 1000) +
                                  2.0 * Operator::Identity(n, n);
    const Operator built = metric_from_basis(cols);
    CHECK((built - built.adjoint()).norm() == 0.0);
    CHECK(hermitian_eig(built).eigenvalues[0] > 0.0);
  }
}

TEST_CASE("argument guards") {
  CHECK(thrown_code([] { coriolis_from_dyson(GeneratorFunction::zero(2), 0.0, 0.0); }) ==
        Errc::config_error);

  std::vector<DualStateVector> ragged = {(Eigen::VectorXcd(2) << 1, 0).finished(),
                                         (Eigen::VectorXcd(3) << 0, 1, 0).finished()};
  CHECK(thrown_code([&] { metric_from_basis(ragged); }) == Errc::dimension_mismatch);

  SpectralHamiltonian bad;
  bad.basis.kets = Operator::Identity(2, 2);
  bad.basis.bras = Operator::Identity(2, 2);
  bad.energies = (RealVector(3) << 1, 2, 3).finished();
  CHECK(thrown_code([&] { hamiltonian_from_spectral(bad); }) == Errc::dimension_mismatch);
  bad.energies = (RealVector(2) << 1, std::numeric_limits<double>::quiet_NaN()).finished();
  CHECK(thrown_code([&] { hamiltonian_from_spectral(bad); }) == Errc::non_finite_state);
}
