#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace ellipspin {

using cplx = std::complex<double>;
using Matrix2 = std::array<std::array<cplx, 2>, 2>;

/// Dimensionless problem parameters. Time is measured as tau = omega * t and
/// every frequency is in units of the drive frequency omega.
struct SimParams {
  double h_over_omega = 0.0;  ///< transverse amplitude h / omega
  double H_over_omega = 0.5;  ///< longitudinal amplitude H / omega
  double k = 0.0;             ///< elliptic modulus in [0, 1]

  static SimParams from_detuning(double h_over_omega, double delta_over_omega, double k) {
    return {h_over_omega, delta_over_omega + 0.5, k};
  }

  /// Delta / omega = H / omega - 1/2.
  double delta_over_omega() const { return H_over_omega - 0.5; }
  /// Omega_R / omega = sqrt((h / omega)^2 + (Delta / omega)^2).
  double rabi_over_omega() const;
};

/// Two-component spinor: amplitudes without (psi1) and with (psi2) a flip.
struct SpinState {
  cplx psi1{1.0, 0.0};
  cplx psi2{0.0, 0.0};

  double norm() const { return std::norm(psi1) + std::norm(psi2); }
};

struct Polarization {
  double px = 0.0;
  double py = 0.0;
  double pz = 0.0;
};

struct TrajectorySample {
  double tau = 0.0;
  SpinState lab_state;
  SpinState rot_state;
  double p_flip = 0.0;  ///< |psi2|^2 of the lab state
  Polarization polarization;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
};

/// 2x2 evolution matrix mapping lab-frame initial amplitudes to lab-frame
/// amplitudes at tau.
struct Propagator {
  cplx u11{1.0, 0.0}, u12{0.0, 0.0};
  cplx u21{0.0, 0.0}, u22{1.0, 0.0};

  SpinState apply(const SpinState& s) const {
    return {u11 * s.psi1 + u12 * s.psi2, u21 * s.psi1 + u22 * s.psi2};
  }
  cplx determinant() const { return u11 * u22 - u12 * u21; }
  /// max_ij |(U^dagger U - I)_ij|
  double unitarity_error() const;
};

enum class Frame { Lab, Rotating };
enum class FrameMap { LabToRot, RotToLab };

inline constexpr double kDefaultTolerance = 1e-10;

/// Converts laboratory quantities to dimensionless ratios using
/// h = g mu_B h0 / (2 hbar) and H = g mu_B H0 / (2 hbar).
/// Throws DomainError unless omega > 0.
SimParams derive_parameters(double g, double h0_tesla, double H0_tesla, double omega_rad_s);

/// Hamiltonian in units of omega.
Matrix2 hamiltonian(double tau, const SimParams& params, Frame frame);

/// f = sqrt((1 + cn)/2) - i sign(sn) sqrt((1 - cn)/2), with sign(0) = +1.
///
/// This is the principal square root of cn - i sn. It flips sign where cn
/// passes through -1; that is a global phase of the lab state and drops out
/// of every probability.
cplx gauge_factor(double tau, double k);

SpinState map_frame(const SpinState& state, double tau, double k, FrameMap direction);

/// d/dtau of a rotating-frame state.
SpinState rotating_rhs(double tau, const SimParams& params, const SpinState& state);
/// d/dtau of a lab-frame state.
SpinState lab_rhs(double tau, const SimParams& params, const SpinState& state);

/// Integrates the rotating-frame equations with an adaptive Dormand-Prince
/// 5(4) pair and samples the solution at every point of `tau_grid`.
///
/// The grid must start at 0 and increase strictly. No renormalisation is
/// applied. Throws IntegrationError (carrying the last accepted tau) when the
/// step size underflows.
Trajectory evolve(const SpinState& initial, const SimParams& params,
                  std::span<const double> tau_grid, double tol = kDefaultTolerance);

/// Same integrator applied to the lab-frame equations directly. Used to
/// cross-check the gauge transformation.
std::vector<SpinState> evolve_lab(const SpinState& initial, const SimParams& params,
                                  std::span<const double> tau_grid,
                                  double tol = kDefaultTolerance);

/// Columns are the lab-frame evolutions of (1, 0) and (0, 1).
Propagator propagator(double tau, const SimParams& params, double tol = kDefaultTolerance);

/// (h / Omega_R)^2 sin^2(Omega_R tau / omega). Requires k = 0.
double rabi_probability(double tau, const SimParams& params);

/// Exact resonant state (f cos(h tau / omega), -i f* sin(h tau / omega)) for
/// initial state (1, 0). Requires zero detuning.
SpinState resonance_solution(double tau, const SimParams& params);

/// Closed-form propagator at zero detuning.
Propagator resonance_propagator(double tau, const SimParams& params);

/// n_samples points evenly spaced over [0, tau_max].
std::vector<double> uniform_grid(double tau_max, int n_samples);

}  // namespace ellipspin
