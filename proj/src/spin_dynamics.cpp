#include "ellipspin/spin_dynamics.hpp"

#include <cmath>
#include <string>

#include "dopri5.hpp"
#include "ellipspin/elliptic.hpp"
#include "ellipspin/error.hpp"
#include "ellipspin/observables.hpp"

namespace ellipspin {

namespace {

// CODATA 2018.
constexpr double kBohrMagneton = 9.2740100783e-24;  // J / T
constexpr double kHbar = 1.054571817e-34;           // J s

constexpr cplx kI{0.0, 1.0};
constexpr double kResonanceTolerance = 1e-12;

using State = detail::CState<2>;

State to_array(const SpinState& s) { return {s.psi1, s.psi2}; }
SpinState from_array(const State& a) { return {a[0], a[1]}; }

void validate_grid(std::span<const double> grid, double tol) {
  if (grid.empty()) throw PreconditionError("tau grid is empty");
  if (grid.front() != 0.0) throw PreconditionError("tau grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1]) || !std::isfinite(grid[i])) {
      throw PreconditionError("tau grid must be finite and strictly increasing");
    }
  }
  if (!(tol > 0.0) || !std::isfinite(tol)) throw PreconditionError("tolerance must be positive");
}

void validate_initial(const SpinState& s) {
  if (std::abs(s.norm() - 1.0) > 1e-8) {
    throw PreconditionError("initial state is not normalised");
  }
}

}  // namespace

double SimParams::rabi_over_omega() const { return std::hypot(h_over_omega, delta_over_omega()); }

double Propagator::unitarity_error() const {
  // U^dagger U
  const cplx m11 = std::conj(u11) * u11 + std::conj(u21) * u21;
  const cplx m12 = std::conj(u11) * u12 + std::conj(u21) * u22;
  const cplx m22 = std::conj(u12) * u12 + std::conj(u22) * u22;
  return std::max({std::abs(m11 - 1.0), std::abs(m12), std::abs(m22 - 1.0)});
}

SimParams derive_parameters(double g, double h0_tesla, double H0_tesla, double omega_rad_s) {
  if (!(omega_rad_s > 0.0) || !std::isfinite(omega_rad_s)) {
    throw DomainError("drive frequency must be positive");
  }
  const double scale = g * kBohrMagneton / (2.0 * kHbar * omega_rad_s);
  return {scale * h0_tesla, scale * H0_tesla, 0.0};
}

Matrix2 hamiltonian(double tau, const SimParams& p, Frame frame) {
  const auto e = elliptic::jacobi(tau, p.k);
  const double h = p.h_over_omega;
  if (frame == Frame::Lab) {
    const double diag = p.H_over_omega * e.dn;
    return {{{cplx(diag), h * cplx(e.cn, -e.sn)}, {h * cplx(e.cn, e.sn), cplx(-diag)}}};
  }
  const double diag = p.delta_over_omega() * e.dn;
  return {{{cplx(diag), cplx(h)}, {cplx(h), cplx(-diag)}}};
}

cplx gauge_factor(double tau, double k) {
  const auto e = elliptic::jacobi(tau, k);
  const double sign = e.sn < 0.0 ? -1.0 : 1.0;
  const double re = std::sqrt(std::max(0.0, 0.5 * (1.0 + e.cn)));
  const double im = std::sqrt(std::max(0.0, 0.5 * (1.0 - e.cn)));
  return {re, -sign * im};
}

SpinState map_frame(const SpinState& s, double tau, double k, FrameMap direction) {
  const cplx f = gauge_factor(tau, k);
  // psi = diag(f, f*) phi, and the inverse of diag(f, f*) is diag(f*, f).
  if (direction == FrameMap::RotToLab) return {f * s.psi1, std::conj(f) * s.psi2};
  return {std::conj(f) * s.psi1, f * s.psi2};
}

SpinState rotating_rhs(double tau, const SimParams& p, const SpinState& s) {
  const double d = p.delta_over_omega() * elliptic::jacobi(tau, p.k).dn;
  const double h = p.h_over_omega;
  return {-kI * (d * s.psi1 + h * s.psi2), -kI * (h * s.psi1 - d * s.psi2)};
}

SpinState lab_rhs(double tau, const SimParams& p, const SpinState& s) {
  const Matrix2 m = hamiltonian(tau, p, Frame::Lab);
  return {-kI * (m[0][0] * s.psi1 + m[0][1] * s.psi2),
          -kI * (m[1][0] * s.psi1 + m[1][1] * s.psi2)};
}

Trajectory evolve(const SpinState& initial, const SimParams& params,
                  std::span<const double> tau_grid, double tol) {
  validate_grid(tau_grid, tol);
  validate_initial(initial);

  // Rotating and lab frames coincide at tau = 0 since f(0) = 1.
  auto rhs = [&params](double tau, const State& y) {
    return to_array(rotating_rhs(tau, params, from_array(y)));
  };
  const auto states = detail::dopri5_sample<2>(rhs, to_array(initial), tau_grid, tol);

  Trajectory traj;
  traj.samples.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    TrajectorySample s;
    s.tau = tau_grid[i];
    s.rot_state = from_array(states[i]);
    s.lab_state = map_frame(s.rot_state, s.tau, params.k, FrameMap::RotToLab);
    s.p_flip = std::norm(s.lab_state.psi2);
    s.polarization = polarization(s.lab_state);
    traj.samples.push_back(s);
  }
  return traj;
}

std::vector<SpinState> evolve_lab(const SpinState& initial, const SimParams& params,
                                  std::span<const double> tau_grid, double tol) {
  validate_grid(tau_grid, tol);
  validate_initial(initial);
  auto rhs = [&params](double tau, const State& y) {
    return to_array(lab_rhs(tau, params, from_array(y)));
  };
  const auto states = detail::dopri5_sample<2>(rhs, to_array(initial), tau_grid, tol);
  std::vector<SpinState> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(from_array(s));
  return out;
}

Propagator propagator(double tau, const SimParams& params, double tol) {
  if (tau < 0.0 || !std::isfinite(tau)) throw PreconditionError("propagator needs tau >= 0");
  if (tau == 0.0) return {};
  const std::array<double, 2> grid{0.0, tau};
  const SpinState col1 = evolve({1.0, 0.0}, params, grid, tol).samples.back().lab_state;
  const SpinState col2 = evolve({0.0, 1.0}, params, grid, tol).samples.back().lab_state;
  return {col1.psi1, col2.psi1, col1.psi2, col2.psi2};
}

double rabi_probability(double tau, const SimParams& params) {
  if (params.k != 0.0) throw PreconditionError("Rabi formula requires k = 0");
  const double rabi = params.rabi_over_omega();
  if (rabi == 0.0) return 0.0;
  const double s = std::sin(rabi * tau);
  const double h = params.h_over_omega;
  return (h * h) / (rabi * rabi) * s * s;
}

SpinState resonance_solution(double tau, const SimParams& params) {
  if (std::abs(params.delta_over_omega()) > kResonanceTolerance) {
    throw PreconditionError("closed-form solution requires zero detuning");
  }
  const cplx f = gauge_factor(tau, params.k);
  const double phase = params.h_over_omega * tau;
  return {f * std::cos(phase), -kI * std::conj(f) * std::sin(phase)};
}

Propagator resonance_propagator(double tau, const SimParams& params) {
  if (std::abs(params.delta_over_omega()) > kResonanceTolerance) {
    throw PreconditionError("closed-form propagator requires zero detuning");
  }
  const cplx f = gauge_factor(tau, params.k);
  const double c = std::cos(params.h_over_omega * tau);
  const double s = std::sin(params.h_over_omega * tau);
  return {f * c, -kI * f * s, -kI * std::conj(f) * s, std::conj(f) * c};
}

std::vector<double> uniform_grid(double tau_max, int n_samples) {
  if (n_samples < 2 || !(tau_max > 0.0)) {
    throw PreconditionError("grid needs n_samples >= 2 and tau_max > 0");
  }
  std::vector<double> grid(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    grid[static_cast<std::size_t>(i)] = tau_max * i / (n_samples - 1);
  }
  return grid;
}

}  // namespace ellipspin
