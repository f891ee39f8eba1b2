#pragma once

#include <array>
#include <span>

#include "ellipspin/spin_dynamics.hpp"

namespace ellipspin {

/// |LHS - RHS| of each conservation law of the rotating-frame system written
/// for phi1 = x + iy, phi2 = u + iv.
struct InvariantResiduals {
  double sphere = 0.0;          ///< x^2 + y^2 + u^2 + v^2 = 1
  double first_integral = 0.0;  ///< v x' - u y' + y u' - x v' = h / omega
  double energy_like = 0.0;     ///< |phi'|^2 + (Delta k / omega)^2 sn^2 = (h^2 + Delta^2) / omega^2
  double angular = 0.0;         ///< y x' - x y' + u v' - v u' = (Delta / omega) dn

  double max() const;
};

/// Expectation values of the Pauli matrices (sigma_y = [[0, -i], [i, 0]]).
Polarization polarization(const SpinState& state);

/// Resonant polarisation in closed form,
/// (sn(tau) sin(2 h tau / omega), -cn(tau) sin(2 h tau / omega), cos(2 h tau / omega)).
/// The elliptic functions carry modulus k. Requires zero detuning.
Polarization resonance_polarization(double tau, const SimParams& params);

/// Field vector 2 (h cn, h sn, H dn) / omega, so that dP/dtau = field x P.
std::array<double, 3> bloch_field(double tau, const SimParams& params);

/// Largest |dP/dtau - field x P| over interior samples, with dP/dtau taken
/// by central differences. Samples must be uniformly spaced; at least three
/// are needed (DomainError otherwise).
double bloch_residual(std::span<const double> taus, std::span<const Polarization> pol,
                      const SimParams& params);
double bloch_residual(const Trajectory& traj, const SimParams& params);

/// `state` and `derivative` are in the rotating frame; the derivative should
/// come from rotating_rhs().
InvariantResiduals four_vector_residuals(double tau, const SimParams& params,
                                         const SpinState& state, const SpinState& derivative);

/// Residual of the second-order equation for phi2,
///   phi2'' + (i (Delta/omega) k^2 sn cn - (Delta k / omega)^2 sn^2 + (Omega_R / omega)^2) phi2,
/// at `tau`, with phi2 integrated from (1, 0) and phi2'' obtained by
/// differentiating the first-order system.
double lame_residual(const SimParams& params, double tau, double tol = kDefaultTolerance);

}  // namespace ellipspin
