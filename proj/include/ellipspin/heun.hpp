#pragma once

// Reduction of the spin-flip amplitude equation to the general Heun equation
//
//   v'' + (gamma/z + delta/(z-1) + epsilon/(z-a)) v' + (alpha beta z - q_a) / (z (z-1) (z-a)) v = 0,
//
// with a = 1/k^2, and recomputation of the flip probability from its
// solutions by analytic continuation of local power series.

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "ellipspin/spin_dynamics.hpp"

namespace ellipspin::heun {

/// Coefficients of the algebraic (Fuchsian) form
///   y'' + sum A_i/(z - z_i) y' + sum (B_i/(z - z_i)^2 + C_i/(z - z_i)) y = 0
/// over z_i in {0, 1, 1/k^2}.
struct AlgebraicCoefficients {
  double a1 = 0.5, a2 = 0.5, a3 = 0.5;
  double b1 = 0.0, b2 = 0.0, b3 = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double small_a = 0.0;  ///< Delta / (4 omega)
  double small_b = 0.0;  ///< Delta^2 / (4 omega^2)
};

/// Characteristic exponents of the algebraic form at 0, 1, 1/k^2 and infinity.
/// A *_degenerate flag is set when the two roots differ by an integer, in
/// which case the second local solution may contain a logarithm.
struct ExponentSet {
  double p_plus = 0.0, p_minus = 0.0;
  double q_plus = 0.0, q_minus = 0.0;
  double r_plus = 0.0, r_minus = 0.0;
  double rho_inf_plus = 0.0, rho_inf_minus = 0.0;
  bool p_degenerate = false;
  bool q_degenerate = false;
  bool r_degenerate = false;
  bool rho_degenerate = false;
};

enum class Root { Plus, Minus };

/// Which roots (p, q, r) are factored out of y to reach the Heun form.
struct ExponentSelection {
  Root p = Root::Minus;
  Root q = Root::Minus;
  Root r = Root::Minus;

  /// e.g. "p-q+r-"
  std::string label() const;
  /// All eight choices, in the order p+q+r+, p+q-r+, p+q+r-, p+q-r-, p-q+r+, ...
  static std::array<ExponentSelection, 8> all();
  static ExponentSelection parse(const std::string& label);

  friend bool operator==(const ExponentSelection&, const ExponentSelection&) = default;
};

struct HeunData {
  double gamma = 0.0, delta = 0.0, epsilon = 0.0;
  double alpha = 0.0, beta = 0.0;
  double q_a = 0.0;         ///< accessory parameter
  double singular_a = 0.0;  ///< 1 / k^2
  double p = 0.0, q = 0.0, r = 0.0;  ///< factored exponents
  ExponentSelection selection;
};

/// Exponent pairs at each singular point of the Heun equation.
struct RiemannSymbol {
  std::array<double, 3> points{};  ///< 0, 1, 1/k^2 (infinity implied)
  std::array<std::array<double, 2>, 4> exponents{};
  double accessory = 0.0;
};

/// sn((tau - iK')/2, k), evaluated from real-argument functions at tau/2:
/// k^(-1/2) ((1 + k) sn - i cn dn) / (1 + k sn^2). Requires 0 < k < 1.
cplx sn_shifted_half(double tau, double k);

/// Heun variable z = sn^2((tau - iK')/2, k). Its path over real tau lies on
/// the circle |z| = 1/k. Requires 0 < k < 1.
cplx z_of_tau(double tau, double k);

/// dz/dtau from the derivative identities of sn, cn, dn.
cplx dz_dtau(double tau, double k);

AlgebraicCoefficients algebraic_coefficients(const SimParams& params);
ExponentSet indicial_exponents(const SimParams& params);
HeunData heun_parameters(const SimParams& params, ExponentSelection selection = {});
RiemannSymbol riemann_symbol(const HeunData& data);

/// Principal branch of z^p (z - 1)^q (z - 1/k^2)^r. DomainError at a
/// singular point whose exponent is negative.
cplx w_factor(cplx z, const HeunData& data);

/// w along a path, continuous from the principal branch at path.front().
std::vector<cplx> w_factor_along(std::span<const cplx> path, const HeunData& data);

/// Left-hand side of the Heun equation at z.
cplx heun_residual(const HeunData& data, cplx z, cplx v, cplx dv, cplx d2v);

enum class CenterKind { Zero, One, SingularA, Ordinary };

struct SeriesCenter {
  CenterKind kind = CenterKind::Ordinary;
  cplx point{0.0, 0.0};  ///< used only for Ordinary

  static SeriesCenter at(cplx z0) { return {CenterKind::Ordinary, z0}; }
};

/// At a singular center: Analytic is exponent 0, Complement is 1 - gamma
/// (1 - delta, 1 - epsilon). At an ordinary center: Analytic starts (1, 0),
/// Complement starts (0, 1).
enum class ExponentChoice { Analytic, Complement };

struct LocalSeries {
  cplx center{0.0, 0.0};
  double exponent = 0.0;
  std::vector<cplx> coefficients;
  double radius = 0.0;  ///< distance to the nearest other singular point
  /// Set when the chosen exponent sits an integer below the other one, so
  /// the recurrence breaks down and a logarithmic solution would be needed.
  /// coefficients is empty in that case.
  bool requires_log = false;

  cplx value(cplx z) const;
  cplx derivative(cplx z) const;
  cplx second_derivative(cplx z) const;
};

LocalSeries local_series(const HeunData& data, SeriesCenter center, ExponentChoice choice,
                         int n_terms = 40);

/// Values and z-derivatives of two solutions.
struct SolutionPair {
  cplx v1{1.0, 0.0}, dv1{0.0, 0.0};
  cplx v2{0.0, 0.0}, dv2{1.0, 0.0};

  cplx wronskian() const { return v1 * dv2 - v2 * dv1; }
};

struct ContinuationResult {
  SolutionPair end;
  std::size_t steps = 0;
  /// max relative deviation of v1 v2' - v2 v1' from its closed form
  /// W0 z^-gamma (z-1)^-delta (z-a)^-epsilon along the path
  double wronskian_error = 0.0;
};

struct ContinuationOptions {
  int n_terms = 64;
  double step_fraction = 0.5;
};

/// Continues `initial` (given at path.front()) through the path vertices by
/// re-expanding in Taylor series; each step is at most step_fraction times
/// the distance to the nearest singular point. Throws PathError when the
/// path runs into a singular point and StepError when a series has not
/// converged within n_terms.
ContinuationResult continue_along_path(const HeunData& data, std::span<const cplx> path,
                                       const SolutionPair& initial = {},
                                       ContinuationOptions options = {});

/// z(tau') sampled on [0, tau], fine enough for continuation and branch tracking.
std::vector<cplx> tau_path(double tau, double k);

/// Spin-flip probability from a fundamental system of the Heun equation,
///   (h/omega)^2 |w(tau) (v1(tau) v2(0) - v2(tau) v1(0))|^2
///            / |w(0) (v1 dv2/dtau - v2 dv1/dtau)(0)|^2.
/// Requires 0 < k < 1 and tau >= 0.
double flip_probability_heun(double tau, const SimParams& params, ExponentSelection selection = {},
                             ContinuationOptions options = {});

}  // namespace ellipspin::heun
