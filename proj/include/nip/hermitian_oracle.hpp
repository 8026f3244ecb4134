#pragma once

#include "nip/evolution_engine.hpp"

namespace nip {

/// Instantaneous picture of the system in the textbook space: Hermitian
/// Hamiltonian, state and Hermitian observable.
struct TextbookSnapshot {
  Operator h_matrix;
  StateVector psi_T;
  Operator q_T;
};

/// |psi>_T = Omega |psi>.
StateVector lift_state(const Operator& omega, const StateVector& psi);

/// Omega A Omega^-1; Hermitian exactly when A is quasi-Hermitian with
/// respect to Omega^dagger Omega.
Operator lift_operator(const Operator& omega, const Operator& a,
                       const Tolerances& tol = default_tolerances());

/// <psi_T | q_T | psi_T>, checked real.
double textbook_expectation(const TextbookSnapshot& snapshot,
                            const Tolerances& tol = default_tolerances());

/// Double-propagation equivalence check. Builds G(t) = Omega^-1 h Omega
/// - i Omega^-1 Omega_dot from the supplied maps, runs the reconstruction
/// pipeline in the working space, propagates |psi_T> under h(t) directly,
/// and returns the largest deviation between the two predictions
/// <psi_Theta|Q|psi> and <psi_T|q_T|psi_T> over the sample grid. psi0 is the
/// textbook-space initial state; Q(0) = Omega^-1(0) q_T Omega(0).
double cross_picture_check(const GeneratorFunction& omega_fn, const GeneratorFunction& h_fn,
                           const StateVector& psi0, const Operator& q_T, const TimeGrid& grid,
                           const Tolerances& tol = default_tolerances());

}  // namespace nip
