#include "ellipspin/observables.hpp"

#include <algorithm>
#include <cmath>

#include "ellipspin/elliptic.hpp"
#include "ellipspin/error.hpp"

namespace ellipspin {

namespace {
constexpr cplx kI{0.0, 1.0};
}

double InvariantResiduals::max() const {
  return std::max({sphere, first_integral, energy_like, angular});
}

Polarization polarization(const SpinState& s) {
  const cplx overlap = std::conj(s.psi1) * s.psi2;
  return {2.0 * overlap.real(), 2.0 * overlap.imag(), std::norm(s.psi1) - std::norm(s.psi2)};
}

Polarization resonance_polarization(double tau, const SimParams& params) {
  if (std::abs(params.delta_over_omega()) > 1e-12) {
    throw PreconditionError("closed-form polarisation requires zero detuning");
  }
  const auto e = elliptic::jacobi(tau, params.k);
  const double angle = 2.0 * params.h_over_omega * tau;
  const double s = std::sin(angle);
  return {e.sn * s, -e.cn * s, std::cos(angle)};
}

std::array<double, 3> bloch_field(double tau, const SimParams& params) {
  const auto e = elliptic::jacobi(tau, params.k);
  return {2.0 * params.h_over_omega * e.cn, 2.0 * params.h_over_omega * e.sn,
          2.0 * params.H_over_omega * e.dn};
}

double bloch_residual(std::span<const double> taus, std::span<const Polarization> pol,
                      const SimParams& params) {
  if (taus.size() != pol.size()) throw DomainError("bloch_residual: size mismatch");
  if (taus.size() < 3) throw DomainError("bloch_residual needs at least three samples");
  const double step = taus[1] - taus[0];
  for (std::size_t i = 2; i < taus.size(); ++i) {
    if (std::abs((taus[i] - taus[i - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step))) {
      throw DomainError("bloch_residual needs uniform spacing");
    }
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < taus.size(); ++i) {
    const double inv = 1.0 / (taus[i + 1] - taus[i - 1]);
    const std::array<double, 3> dp{(pol[i + 1].px - pol[i - 1].px) * inv,
                                   (pol[i + 1].py - pol[i - 1].py) * inv,
                                   (pol[i + 1].pz - pol[i - 1].pz) * inv};
    const auto b = bloch_field(taus[i], params);
    const auto& p = pol[i];
    const std::array<double, 3> cross{b[1] * p.pz - b[2] * p.py, b[2] * p.px - b[0] * p.pz,
                                      b[0] * p.py - b[1] * p.px};
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(dp[c] - cross[c]));
  }
  return worst;
}

double bloch_residual(const Trajectory& traj, const SimParams& params) {
  std::vector<double> taus;
  std::vector<Polarization> pol;
  taus.reserve(traj.samples.size());
  pol.reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    taus.push_back(s.tau);
    pol.push_back(s.polarization);
  }
  return bloch_residual(taus, pol, params);
}

InvariantResiduals four_vector_residuals(double tau, const SimParams& params,
                                         const SpinState& state, const SpinState& derivative) {
  const double x = state.psi1.real(), y = state.psi1.imag();
  const double u = state.psi2.real(), v = state.psi2.imag();
  const double dx = derivative.psi1.real(), dy = derivative.psi1.imag();
  const double du = derivative.psi2.real(), dv = derivative.psi2.imag();

  const auto e = elliptic::jacobi(tau, params.k);
  const double h = params.h_over_omega;
  const double delta = params.delta_over_omega();
  const double k = params.k;

  InvariantResiduals r;
  r.sphere = std::abs(x * x + y * y + u * u + v * v - 1.0);
  r.first_integral = std::abs(v * dx - u * dy + y * du - x * dv - h);
  r.energy_like = std::abs(dx * dx + dy * dy + du * du + dv * dv +
                           delta * delta * k * k * e.sn * e.sn - (h * h + delta * delta));
  r.angular = std::abs(y * dx - x * dy + u * dv - v * du - delta * e.dn);
  return r;
}

double lame_residual(const SimParams& params, double tau, double tol) {
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  SpinState phi{1.0, 0.0};
  if (tau > 0.0) {
    const std::array<double, 2> grid{0.0, tau};
    phi = evolve({1.0, 0.0}, params, grid, tol).samples.back().rot_state;
  }
  const auto e = elliptic::jacobi(tau, params.k);
  const double k = params.k;
  const double delta = params.delta_over_omega();
  const double h = params.h_over_omega;

  // phi' = -i M phi  =>  phi'' = -i M' phi + (-i M)^2 phi, M' = diag(1, -1) Delta dn'.
  const double diag = delta * e.dn;
  const double ddiag = -delta * k * k * e.sn * e.cn;
  const SpinState d1 = rotating_rhs(tau, params, phi);
  const cplx phi2_dd = -kI * (-ddiag * phi.psi2) - kI * (h * d1.psi1 - diag * d1.psi2);

  const double rabi2 = h * h + delta * delta;
  const cplx potential = kI * delta * k * k * e.sn * e.cn - delta * delta * k * k * e.sn * e.sn + rabi2;
  return std::abs(phi2_dd + potential * phi.psi2);
}

}  // namespace ellipspin
