#include "ellipspin/elliptic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "ellipspin/error.hpp"

namespace ellipspin::elliptic {

namespace {

constexpr int kMaxAgmIterations = 64;
constexpr double kAgmRelTol = 1e-15;

double complementary(double k) { return std::sqrt((1.0 - k) * (1.0 + k)); }

void require_modulus(double k, bool allow_one) {
  if (!std::isfinite(k) || k < 0.0 || k > 1.0 || (!allow_one && k == 1.0)) {
    throw DomainError("elliptic modulus out of range: k = " + std::to_string(k));
  }
}

}  // namespace

double agm(double a, double b) {
  for (int i = 0; i < kMaxAgmIterations; ++i) {
    if (std::abs(a - b) <= kAgmRelTol * std::abs(a)) break;
    const double next_a = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = next_a;
  }
  return 0.5 * (a + b);
}

QuarterPeriods complete_elliptic(double k) {
  require_modulus(k, /*allow_one=*/false);
  const double kc = complementary(k);
  QuarterPeriods out;
  out.K = std::numbers::pi / (2.0 * agm(1.0, kc));
  // K(1) diverges; k = 0 has an infinite imaginary quarter period.
  out.Kprime = (k == 0.0) ? INFINITY : std::numbers::pi / (2.0 * agm(1.0, k));
  return out;
}

EllipticTriple jacobi(double u, double k) {
  if (!std::isfinite(u)) throw DomainError("jacobi: non-finite argument");
  require_modulus(k, /*allow_one=*/true);

  if (k == 0.0) return {std::sin(u), std::cos(u), 1.0};
  if (k == 1.0) {
    const double sech = 1.0 / std::cosh(u);
    return {std::tanh(u), sech, sech};
  }

  const double period = 4.0 * complete_elliptic(k).K;
  u -= period * std::nearbyint(u / period);

  // Descending Landen sequence (A&S 16.4.3).
  std::array<double, kMaxAgmIterations + 1> a{};
  std::array<double, kMaxAgmIterations + 1> c{};
  a[0] = 1.0;
  double b = complementary(k);
  c[0] = k;
  int n = 0;
  while (n < kMaxAgmIterations && std::abs(c[n]) > kAgmRelTol * a[n]) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }

  double phi = std::ldexp(a[n] * u, n);
  for (int i = n; i > 0; --i) {
    phi = 0.5 * (phi + std::asin(c[i] / a[i] * std::sin(phi)));
  }
  const double sn = std::sin(phi);
  const double cn = std::cos(phi);
  // dn > 0 for k < 1; the factored form avoids the 0/0 of cn / cos(phi1 - phi0) at cn = 0.
  const double dn = std::sqrt((1.0 - k * sn) * (1.0 + k * sn));
  return {sn, cn, dn};
}

std::pair<double, double> jacobi_identity_residuals(const EllipticTriple& t, double k) {
  return {std::abs(t.sn * t.sn + t.cn * t.cn - 1.0),
          std::abs(t.dn * t.dn + k * k * t.sn * t.sn - 1.0)};
}

}  // namespace ellipspin::elliptic
