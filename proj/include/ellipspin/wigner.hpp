#pragma once

#include <vector>

#include "ellipspin/spin_dynamics.hpp"

namespace ellipspin {

struct EulerAngles {
  double phi = 0.0;
  double theta = 0.0;  ///< in [0, pi]
  double psi = 0.0;
};

/// Rotation matrix of spin j in the basis m = j, j - 1, ..., -j. Row index i
/// holds projection m = j - i.
struct SpinJMatrix {
  double j = 0.0;
  int dim = 1;
  std::vector<cplx> entries;  ///< row-major, dim x dim

  cplx operator()(int row, int col) const { return entries[static_cast<std::size_t>(row * dim + col)]; }
  cplx& operator()(int row, int col) { return entries[static_cast<std::size_t>(row * dim + col)]; }
  /// Entry D_{m m'} addressed by projections.
  cplx element(double m, double m_prime) const;
  double unitarity_error() const;
};

constexpr double kMaxSpin = 25.0;

/// Euler angles of a 2x2 unitary with
///   u11 = cos(theta/2) exp(i (phi + psi) / 2),
///   u21 = i sin(theta/2) exp(-i (phi - psi) / 2),
/// after removing the global phase sqrt(det u). phi - psi is set to 0 when
/// theta = 0 and phi + psi to 0 when theta = pi. DomainError if u is not
/// unitary to 1e-9.
EulerAngles euler_angles(const Propagator& u);

/// D^j(phi, theta, psi) with entries
///   i^(m' - m) e^(i (m phi + m' psi)) sqrt((j+m)!(j-m)!(j+m')!(j-m')!)
///   sum_nu (-1)^nu s^(2nu - m + m') c^(2j - 2nu + m - m')
///          / (nu! (nu - m + m')! (j + m - nu)! (j - m' - nu)!),
/// s = sin(theta/2), c = cos(theta/2). For j = 1/2 this is the propagator
/// rebuilt from its Euler angles.
SpinJMatrix wigner_d(double j, const EulerAngles& angles);

/// |D^j_{m m'}|^2 written with the cos^(4j)(theta/2) prefactor and powers of
/// tan(theta/2).
double transition_probability_j(double j, double m, double m_prime, double theta);

}  // namespace ellipspin
