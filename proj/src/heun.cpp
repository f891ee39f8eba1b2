#include "ellipspin/heun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ellipspin/elliptic.hpp"
#include "ellipspin/error.hpp"

namespace ellipspin::heun {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr double kIdentityTol = 1e-12;
constexpr double kTauSpacing = 0.05;
constexpr std::size_t kMaxSubsteps = 1'000'000;

void require_open_modulus(double k) {
  if (!std::isfinite(k) || !(k > 0.0) || !(k < 1.0)) {
    throw DomainError("Heun reduction needs 0 < k < 1, got k = " + std::to_string(k));
  }
}

bool integer_gap(double diff) { return std::abs(diff - std::nearbyint(diff)) < kIdentityTol; }

// Indicial quadratic rho (rho - 1) + rho / 2 + B = 0 shared by all four points.
double indicial(double rho, double b) { return rho * (rho - 1.0) + 0.5 * rho + b; }

// Heun equation multiplied through by z (z-1) (z-a), re-expanded about z0 in
// the scaled variable t = (z - z0) / scale:
//   P(t) v_tt + Q(t) v_t + R(t) v = 0,
// with P cubic, Q quadratic, R linear.
struct LocalPolys {
  std::array<cplx, 4> p{};
  std::array<cplx, 3> q{};
  std::array<cplx, 2> r{};
};

LocalPolys local_polys(const HeunData& d, cplx z0, cplx scale) {
  const cplx u0 = z0;
  const cplx u1 = z0 - 1.0;
  const cplx u2 = z0 - d.singular_a;
  LocalPolys lp;
  lp.p = {u0 * u1 * u2, u0 * u1 + u0 * u2 + u1 * u2, u0 + u1 + u2, 1.0};
  lp.q = {d.gamma * u1 * u2 + d.delta * u0 * u2 + d.epsilon * u0 * u1,
          d.gamma * (u1 + u2) + d.delta * (u0 + u2) + d.epsilon * (u0 + u1),
          d.gamma + d.delta + d.epsilon};
  lp.r = {d.alpha * d.beta * z0 - d.q_a, d.alpha * d.beta};
  cplx pow_s = 1.0;
  for (int j = 0; j < 4; ++j) {
    lp.p[static_cast<std::size_t>(j)] *= pow_s;
    if (j < 3) lp.q[static_cast<std::size_t>(j)] *= pow_s * scale;
    if (j < 2) lp.r[static_cast<std::size_t>(j)] *= pow_s * scale * scale;
    pow_s *= scale;
  }
  return lp;
}

// Taylor coefficients at an ordinary point from c0 = v, c1 = v'.
std::vector<cplx> ordinary_recurrence(const LocalPolys& lp, cplx c0, cplx c1, int n_terms) {
  std::vector<cplx> c(static_cast<std::size_t>(n_terms), cplx{});
  c[0] = c0;
  if (n_terms > 1) c[1] = c1;
  for (int m = 2; m < n_terms; ++m) {
    cplx sum{};
    for (int j = 1; j <= 3; ++j) {
      if (m - j < 0) break;
      sum += lp.p[static_cast<std::size_t>(j)] * static_cast<double>((m - j) * (m - j - 1)) *
             c[static_cast<std::size_t>(m - j)];
    }
    for (int j = 0; j <= 2; ++j) {
      if (m - j - 1 < 0) break;
      sum += lp.q[static_cast<std::size_t>(j)] * static_cast<double>(m - j - 1) *
             c[static_cast<std::size_t>(m - j - 1)];
    }
    for (int j = 0; j <= 1; ++j) {
      if (m - j - 2 < 0) break;
      sum += lp.r[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(m - j - 2)];
    }
    c[static_cast<std::size_t>(m)] = -sum / (lp.p[0] * static_cast<double>(m * (m - 1)));
  }
  return c;
}

// Frobenius coefficients at a singular point (lp.p[0] == 0), exponent s,
// c0 = 1. Three-term recurrence in c_n, c_{n-1}, c_{n-2}.
std::vector<cplx> singular_recurrence(const LocalPolys& lp, double s, int n_terms) {
  std::vector<cplx> c(static_cast<std::size_t>(n_terms), cplx{});
  c[0] = 1.0;
  for (int n = 1; n < n_terms; ++n) {
    const double ns = n + s;
    const cplx lead = ns * (lp.p[1] * (ns - 1.0) + lp.q[0]);
    cplx sum{};
    for (int j = 2; j <= 3; ++j) {
      const int idx = n + 1 - j;
      if (idx < 0) continue;
      sum += lp.p[static_cast<std::size_t>(j)] * ((idx + s) * (idx + s - 1.0)) *
             c[static_cast<std::size_t>(idx)];
    }
    for (int j = 1; j <= 2; ++j) {
      const int idx = n - j;
      if (idx < 0) continue;
      sum += lp.q[static_cast<std::size_t>(j)] * (idx + s) * c[static_cast<std::size_t>(idx)];
    }
    for (int j = 0; j <= 1; ++j) {
      const int idx = n - 1 - j;
      if (idx < 0) continue;
      sum += lp.r[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(idx)];
    }
    c[static_cast<std::size_t>(n)] = -sum / lead;
  }
  return c;
}

double nearest_singular_distance(cplx z, double a) {
  return std::min({std::abs(z), std::abs(z - 1.0), std::abs(z - a)});
}

}  // namespace

std::string ExponentSelection::label() const {
  auto sign = [](Root r) { return r == Root::Plus ? '+' : '-'; };
  return std::string{'p', sign(p), 'q', sign(q), 'r', sign(r)};
}

std::array<ExponentSelection, 8> ExponentSelection::all() {
  using R = Root;
  return {{{R::Plus, R::Plus, R::Plus},
           {R::Plus, R::Minus, R::Plus},
           {R::Plus, R::Plus, R::Minus},
           {R::Plus, R::Minus, R::Minus},
           {R::Minus, R::Plus, R::Plus},
           {R::Minus, R::Minus, R::Plus},
           {R::Minus, R::Plus, R::Minus},
           {R::Minus, R::Minus, R::Minus}}};
}

ExponentSelection ExponentSelection::parse(const std::string& label) {
  for (const auto& s : all()) {
    if (s.label() == label) return s;
  }
  throw DomainError("unknown exponent selection '" + label + "'");
}

cplx sn_shifted_half(double tau, double k) {
  require_open_modulus(k);
  const auto e = elliptic::jacobi(0.5 * tau, k);
  const cplx num((1.0 + k) * e.sn, -e.cn * e.dn);
  return num / ((1.0 + k * e.sn * e.sn) * std::sqrt(k));
}

cplx z_of_tau(double tau, double k) {
  const cplx s = sn_shifted_half(tau, k);
  return s * s;
}

cplx dz_dtau(double tau, double k) {
  require_open_modulus(k);
  const auto e = elliptic::jacobi(0.5 * tau, k);
  const double s = e.sn, c = e.cn, d = e.dn;
  const cplx num((1.0 + k) * s, -c * d);
  const cplx dnum(0.5 * (1.0 + k) * c * d, 0.5 * s * (d * d + k * k * c * c));
  const double den = 1.0 + k * s * s;
  const double dden = k * s * c * d;
  const double scale = 1.0 / std::sqrt(k);
  const cplx S = scale * num / den;
  const cplx dS = scale * (dnum * den - num * dden) / (den * den);
  return 2.0 * S * dS;
}

AlgebraicCoefficients algebraic_coefficients(const SimParams& params) {
  const double k = params.k;
  require_open_modulus(k);
  const double delta = params.delta_over_omega();
  const double h = params.h_over_omega;
  const double k2 = k * k;

  AlgebraicCoefficients c;
  c.small_a = delta / 4.0;
  c.small_b = delta * delta / 4.0;
  const double a = c.small_a;
  const double b = c.small_b;
  const double rabi2 = h * h + delta * delta;

  c.b1 = c.b2 = a - b;
  c.b3 = -(a + b);
  const double bracket = (a * (k2 - 1.0) - b * (k2 + 1.0) + rabi2) / (k2 - 1.0);
  c.c1 = 2.0 * (a - b) - 2.0 * b * k2 + rabi2;
  c.c2 = -2.0 * (a - b) - (a + b) + bracket;
  // Residue of the transformed potential at z = 1/k^2.
  c.c3 = k2 * (2.0 * b * k2 - 4.0 * b - h * h) / (k2 - 1.0);

  const double scale = std::max({1.0, std::abs(c.c1), std::abs(c.c2), std::abs(c.c3)});
  if (std::abs(c.c1 + c.c2 + c.c3) > kIdentityTol * scale) {
    throw ConsistencyError("C1 + C2 + C3 != 0");
  }
  return c;
}

ExponentSet indicial_exponents(const SimParams& params) {
  const double delta = params.delta_over_omega();
  const double a = delta / 4.0;
  const double b = delta * delta / 4.0;
  const double gap_pq = std::abs(delta / 2.0 - 0.25);
  const double gap_r = std::abs(delta / 2.0 + 0.25);

  ExponentSet e;
  e.p_plus = e.q_plus = 0.25 + gap_pq;
  e.p_minus = e.q_minus = 0.25 - gap_pq;
  e.r_plus = e.rho_inf_plus = 0.25 + gap_r;
  e.r_minus = e.rho_inf_minus = 0.25 - gap_r;

  for (double root : {e.p_plus, e.p_minus}) {
    if (std::abs(indicial(root, a - b)) > kIdentityTol) {
      throw ConsistencyError("exponent at z = 0 or 1 fails its indicial equation");
    }
  }
  for (double root : {e.r_plus, e.r_minus}) {
    if (std::abs(indicial(root, -(a + b))) > kIdentityTol) {
      throw ConsistencyError("exponent at z = 1/k^2 or infinity fails its indicial equation");
    }
  }

  e.p_degenerate = e.q_degenerate = integer_gap(e.p_plus - e.p_minus);
  e.r_degenerate = e.rho_degenerate = integer_gap(e.r_plus - e.r_minus);
  return e;
}

HeunData heun_parameters(const SimParams& params, ExponentSelection selection) {
  const auto coef = algebraic_coefficients(params);
  const auto ex = indicial_exponents(params);
  const double k2 = params.k * params.k;

  // Exponents at infinity from the general Fuchsian indicial equation.
  const double at_infinity = coef.b1 + coef.b2 + coef.b3 + coef.c2 + coef.c3 / k2;
  const double sum_a = coef.a1 + coef.a2 + coef.a3;
  for (double rho : {ex.rho_inf_plus, ex.rho_inf_minus}) {
    const double res = rho * (rho - 1.0) + (2.0 - sum_a) * rho + at_infinity;
    if (std::abs(res) > kIdentityTol * std::max(1.0, std::abs(coef.c3 / k2))) {
      throw ConsistencyError("exponent at infinity fails its indicial equation");
    }
  }

  HeunData d;
  d.selection = selection;
  d.p = selection.p == Root::Plus ? ex.p_plus : ex.p_minus;
  d.q = selection.q == Root::Plus ? ex.q_plus : ex.q_minus;
  d.r = selection.r == Root::Plus ? ex.r_plus : ex.r_minus;
  d.singular_a = 1.0 / k2;
  d.gamma = 2.0 * d.p + coef.a1;
  d.delta = 2.0 * d.q + coef.a2;
  d.epsilon = 2.0 * d.r + coef.a3;
  const double pqr = d.p + d.q + d.r;
  d.alpha = ex.rho_inf_plus + pqr;
  d.beta = ex.rho_inf_minus + pqr;
  d.q_a = d.gamma * d.r + 0.5 * d.p - (coef.c1 - d.gamma * d.q - 0.5 * d.p) / k2;

  if (std::abs(d.gamma + d.delta + d.epsilon - (d.alpha + d.beta + 1.0)) > kIdentityTol) {
    throw ConsistencyError("Fuchs condition violated for selection " + selection.label());
  }
  return d;
}

RiemannSymbol riemann_symbol(const HeunData& d) {
  RiemannSymbol s;
  s.points = {0.0, 1.0, d.singular_a};
  s.exponents = {{{0.0, 1.0 - d.gamma}, {0.0, 1.0 - d.delta}, {0.0, 1.0 - d.epsilon}, {d.alpha, d.beta}}};
  s.accessory = d.q_a;
  return s;
}

cplx w_factor(cplx z, const HeunData& d) {
  const std::array<cplx, 3> base{z, z - 1.0, z - d.singular_a};
  const std::array<double, 3> expo{d.p, d.q, d.r};
  cplx w = 1.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (base[i] == cplx{}) {
      if (expo[i] < 0.0) throw DomainError("w factor has a pole at this singular point");
      if (expo[i] > 0.0) return 0.0;
      continue;
    }
    if (expo[i] != 0.0) w *= std::exp(expo[i] * std::log(base[i]));
  }
  return w;
}

std::vector<cplx> w_factor_along(std::span<const cplx> path, const HeunData& d) {
  std::vector<cplx> out;
  if (path.empty()) return out;
  out.reserve(path.size());
  const std::array<double, 3> points{0.0, 1.0, d.singular_a};
  const std::array<double, 3> expo{d.p, d.q, d.r};
  std::array<cplx, 3> logs{};
  for (std::size_t i = 0; i < 3; ++i) {
    const cplx base = path[0] - points[i];
    if (base == cplx{}) throw PathError("path starts at a singular point");
    logs[i] = std::log(base);
  }
  auto assemble = [&]() {
    return std::exp(expo[0] * logs[0] + expo[1] * logs[1] + expo[2] * logs[2]);
  };
  out.push_back(assemble());
  for (std::size_t j = 1; j < path.size(); ++j) {
    for (std::size_t i = 0; i < 3; ++i) {
      const cplx ratio = (path[j] - points[i]) / (path[j - 1] - points[i]);
      if (ratio == cplx{} || !std::isfinite(std::abs(ratio))) {
        throw PathError("path passes through a singular point");
      }
      const cplx step = std::log(ratio);
      if (std::abs(step.imag()) > 0.5 * std::numbers::pi) {
        throw PathError("path too coarse to track the branch of w");
      }
      logs[i] += step;
    }
    out.push_back(assemble());
  }
  return out;
}

cplx heun_residual(const HeunData& d, cplx z, cplx v, cplx dv, cplx d2v) {
  const cplx za = z - d.singular_a;
  return d2v + (d.gamma / z + d.delta / (z - 1.0) + d.epsilon / za) * dv +
         (d.alpha * d.beta * z - d.q_a) / (z * (z - 1.0) * za) * v;
}

cplx LocalSeries::value(cplx z) const {
  const cplx x = z - center;
  cplx sum{};
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) sum = sum * x + *it;
  return exponent == 0.0 ? sum : std::pow(x, exponent) * sum;
}

cplx LocalSeries::derivative(cplx z) const {
  const cplx x = z - center;
  const auto n = static_cast<int>(coefficients.size());
  if (exponent == 0.0) {
    cplx sum{};
    for (int i = n - 1; i >= 1; --i) sum = sum * x + static_cast<double>(i) * coefficients[static_cast<std::size_t>(i)];
    return sum;
  }
  cplx sum{};
  for (int i = n - 1; i >= 0; --i) sum = sum * x + (i + exponent) * coefficients[static_cast<std::size_t>(i)];
  return std::pow(x, exponent - 1.0) * sum;
}

cplx LocalSeries::second_derivative(cplx z) const {
  const cplx x = z - center;
  const auto n = static_cast<int>(coefficients.size());
  if (exponent == 0.0) {
    cplx sum{};
    for (int i = n - 1; i >= 2; --i) {
      sum = sum * x + static_cast<double>(i * (i - 1)) * coefficients[static_cast<std::size_t>(i)];
    }
    return sum;
  }
  cplx sum{};
  for (int i = n - 1; i >= 0; --i) {
    sum = sum * x + ((i + exponent) * (i + exponent - 1.0)) * coefficients[static_cast<std::size_t>(i)];
  }
  return std::pow(x, exponent - 2.0) * sum;
}

LocalSeries local_series(const HeunData& d, SeriesCenter center, ExponentChoice choice, int n_terms) {
  if (n_terms < 8) throw PreconditionError("local_series needs at least 8 terms");
  const double a = d.singular_a;

  LocalSeries s;
  double other = 0.0;
  switch (center.kind) {
    case CenterKind::Zero:
      s.center = 0.0;
      s.radius = 1.0;
      other = 1.0 - d.gamma;
      break;
    case CenterKind::One:
      s.center = 1.0;
      s.radius = std::min(1.0, a - 1.0);
      other = 1.0 - d.delta;
      break;
    case CenterKind::SingularA:
      s.center = a;
      s.radius = a - 1.0;
      other = 1.0 - d.epsilon;
      break;
    case CenterKind::Ordinary:
      s.center = center.point;
      s.radius = nearest_singular_distance(center.point, a);
      if (s.radius == 0.0) throw DomainError("ordinary center placed on a singular point");
      break;
  }

  const LocalPolys lp = local_polys(d, s.center, 1.0);
  if (center.kind == CenterKind::Ordinary) {
    s.exponent = 0.0;
    s.coefficients = choice == ExponentChoice::Analytic ? ordinary_recurrence(lp, 1.0, 0.0, n_terms)
                                                        : ordinary_recurrence(lp, 0.0, 1.0, n_terms);
    return s;
  }

  s.exponent = choice == ExponentChoice::Analytic ? 0.0 : other;
  const double partner = choice == ExponentChoice::Analytic ? other : 0.0;
  const double gap = partner - s.exponent;
  if (integer_gap(gap) && std::nearbyint(gap) >= (choice == ExponentChoice::Complement ? 0.0 : 1.0)) {
    s.requires_log = true;
    return s;
  }
  s.coefficients = singular_recurrence(lp, s.exponent, n_terms);
  return s;
}

ContinuationResult continue_along_path(const HeunData& d, std::span<const cplx> path,
                                       const SolutionPair& initial, ContinuationOptions options) {
  if (options.n_terms < 8) throw PreconditionError("continuation needs at least 8 terms");
  if (!(options.step_fraction > 0.0) || options.step_fraction >= 1.0) {
    throw PreconditionError("step_fraction must lie in (0, 1)");
  }
  ContinuationResult result;
  result.end = initial;
  if (path.empty()) return result;

  const double a = d.singular_a;
  const std::array<double, 3> points{0.0, 1.0, a};
  const std::array<double, 3> weights{d.gamma, d.delta, d.epsilon};
  auto too_close = [&](cplx z) { return nearest_singular_distance(z, a) <= 1e-12 * (1.0 + std::abs(z)); };
  if (too_close(path.front())) throw PathError("path starts at a singular point");

  const cplx w0 = initial.wronskian();
  cplx log_ratio{};  // accumulated -sum weight_i log((z - z_i) / (z_start - z_i))
  SolutionPair cur = initial;
  cplx z = path.front();
  const auto n = options.n_terms;

  for (std::size_t seg = 1; seg < path.size(); ++seg) {
    const cplx target = path[seg];
    if (too_close(target)) throw PathError("path vertex on a singular point");
    while (z != target) {
      const double radius = nearest_singular_distance(z, a);
      if (too_close(z)) throw PathError("path runs into a singular point");
      const double max_len = options.step_fraction * radius;
      const cplx remaining = target - z;
      const cplx next = std::abs(remaining) <= max_len ? target : z + remaining * (max_len / std::abs(remaining));
      const cplx step = next - z;

      const LocalPolys lp = local_polys(d, z, step);
      const auto c1 = ordinary_recurrence(lp, cur.v1, step * cur.dv1, n);
      const auto c2 = ordinary_recurrence(lp, cur.v2, step * cur.dv2, n);

      SolutionPair nxt{{}, {}, {}, {}};
      double mag = 0.0;
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        nxt.v1 += c1[ui];
        nxt.v2 += c2[ui];
        nxt.dv1 += static_cast<double>(i) * c1[ui];
        nxt.dv2 += static_cast<double>(i) * c2[ui];
        mag += std::abs(c1[ui]) + std::abs(c2[ui]);
      }
      nxt.dv1 /= step;
      nxt.dv2 /= step;
      const double tail = std::abs(c1[static_cast<std::size_t>(n - 1)]) + std::abs(c2[static_cast<std::size_t>(n - 1)]) +
                          std::abs(c1[static_cast<std::size_t>(n - 2)]) + std::abs(c2[static_cast<std::size_t>(n - 2)]);
      if (!(tail <= 1e-15 * mag)) {
        throw StepError("local series did not converge within " + std::to_string(n) + " terms");
      }

      for (std::size_t i = 0; i < 3; ++i) {
        log_ratio -= weights[i] * std::log((next - points[i]) / (z - points[i]));
      }
      const cplx w_expected = w0 * std::exp(log_ratio);
      const cplx w_actual = nxt.wronskian();
      if (std::abs(w_expected) > 0.0) {
        result.wronskian_error =
            std::max(result.wronskian_error, std::abs(w_actual - w_expected) / std::abs(w_expected));
      }

      cur = nxt;
      z = next;
      if (++result.steps > kMaxSubsteps) throw PathError("path hugs a singular point too closely");
    }
  }
  result.end = cur;
  return result;
}

std::vector<cplx> tau_path(double tau, double k) {
  require_open_modulus(k);
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw PreconditionError("tau must be finite and >= 0");
  const int segments = std::max(8, static_cast<int>(std::ceil(tau / kTauSpacing)));
  std::vector<cplx> path(static_cast<std::size_t>(segments) + 1);
  for (int i = 0; i <= segments; ++i) {
    path[static_cast<std::size_t>(i)] = z_of_tau(tau * i / segments, k);
  }
  return path;
}

double flip_probability_heun(double tau, const SimParams& params, ExponentSelection selection,
                             ContinuationOptions options) {
  require_open_modulus(params.k);
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw PreconditionError("tau must be finite and >= 0");
  if (tau == 0.0) return 0.0;

  const HeunData d = heun_parameters(params, selection);
  const auto path = tau_path(tau, params.k);
  const SolutionPair start{};  // v1 = 1, v1' = 0, v2 = 0, v2' = 1 at z(0)
  const auto cont = continue_along_path(d, path, start, options);
  const auto w = w_factor_along(path, d);

  const cplx dz0 = dz_dtau(0.0, params.k);
  const SolutionPair& end = cont.end;
  const cplx numerator = w.back() * (end.v1 * start.v2 - end.v2 * start.v1);
  const cplx denominator = w.front() * (start.v1 * start.dv2 * dz0 - start.v2 * start.dv1 * dz0);
  const double h = params.h_over_omega;
  return h * h * std::norm(numerator / denominator);
}

}  // namespace ellipspin::heun
