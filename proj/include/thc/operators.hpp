#pragma once

#include "thc/field.hpp"
#include "thc/params.hpp"

namespace thc {

/// Arakawa's nine-point Jacobian J(psi, f) = psi_y f_z - psi_z f_y.
///
/// The stencil is the average of the three second-order forms (J++, J+x, Jx+)
/// evaluated with both arguments extended by zero outside D. On boundary
/// nodes the stencil sum is divided by the relative trapezoid weight, so
/// that for psi = 0 on the boundary
///     inner(J(psi, f), f) == 0
/// up to rounding, for Neumann and Dirichlet f alike. The result is formed
/// as (K(a,b) - K(b,a))/2, which makes J(a,b) == -J(b,a) bit for bit.
/// Output carries f's boundary kind; Dirichlet outputs are zero on the boundary.
ScalarField arakawa_jacobian(const ScalarField& psi, const ScalarField& f);

/// Five-point Laplacian. DirichletZero: interior stencil, zero on the
/// boundary. NeumannZero: even-reflection ghosts on every edge.
ScalarField laplacian(const ScalarField& f);

/// -inner(laplacian(f), f): the discrete squared gradient norm.
double gradient_energy(const ScalarField& f);

/// Solves laplacian(psi) = q with psi = 0 on the boundary (sine transform).
/// Throws SolverError if the residual ||lap(psi) - q||/||q|| exceeds tol.
ScalarField poisson_solve_dirichlet(const ScalarField& q, double tol = 1e-10);

struct Velocity {
  ScalarField v;  // -psi_z
  ScalarField w;  //  psi_y
};

/// Centred differences inside, one-sided second order on the boundary.
Velocity velocity(const ScalarField& psi);

/// g*(alpha_T T_y - alpha_S S_y), centred in y, zero on the boundary.
ScalarField buoyancy_torque(const ScalarField& T, const ScalarField& S, const PhysParams& p);

struct FluxSources {
  ScalarField T;
  ScalarField S;
};

/// Air-sea fluxes T_z = lambda*(theta - T), S_z = F at z = d realised as
/// sources on the surface row: 2*kappa*flux/dz (ghost-node form of the flux
/// condition on a half control volume). Zero elsewhere.
FluxSources surface_flux_sources(const ScalarField& T, const ScalarField& S, const PhysParams& p);

}  // namespace thc
