#pragma once

#include <utility>

namespace ellipspin::elliptic {

/// Values of the Jacobi elliptic functions at one real argument. The modulus
/// is not stored; it is whatever was passed to jacobi().
struct EllipticTriple {
  double sn = 0.0;
  double cn = 1.0;
  double dn = 1.0;
};

/// Complete elliptic integrals of the first kind for k and for the
/// complementary modulus k' = sqrt(1 - k^2).
struct QuarterPeriods {
  double K = 0.0;
  double Kprime = 0.0;
};

/// Arithmetic-geometric mean of two non-negative numbers. Stops when the
/// means agree to relative 1e-15, or after 64 rounds.
double agm(double a, double b);

/// K(k) for 0 <= k < 1 via the AGM; Kprime(0) is +infinity.
/// Throws DomainError for k outside [0, 1) or non-finite k.
QuarterPeriods complete_elliptic(double k);

/// sn, cn, dn at real u for 0 <= k <= 1.
///
/// The argument is reduced modulo 4K before the descending Landen (AGM)
/// recursion, so large |u| keeps full relative precision of the reduced
/// argument. k = 0 and k = 1 return the trigonometric and hyperbolic closed
/// forms directly.
EllipticTriple jacobi(double u, double k);

/// (|sn^2 + cn^2 - 1|, |dn^2 + k^2 sn^2 - 1|)
std::pair<double, double> jacobi_identity_residuals(const EllipticTriple& t, double k);

}  // namespace ellipspin::elliptic
