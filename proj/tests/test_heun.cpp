#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ellipspin/elliptic.hpp"
#include "ellipspin/error.hpp"
#include "ellipspin/heun.hpp"
#include "ellipspin/spin_dynamics.hpp"
#include "oracles.hpp"

using namespace ellipspin;
using namespace ellipspin::heun;
using std::numbers::pi;

namespace {

constexpr cplx I{0.0, 1.0};

SimParams random_params(std::mt19937_64& g) {
  return SimParams::from_detuning(oracle::uniform(g, 0.05, 0.6), oracle::uniform(g, -0.4, 0.4),
                                  oracle::uniform(g, 0.1, 0.9));
}

// Transformed potential of the phi2 equation in the variable z.
cplx potential(cplx z, const SimParams& p) {
  const double k2 = p.k * p.k;
  const double delta = p.delta_over_omega();
  const double a = delta / 4, b = delta * delta / 4;
  const double rabi2 = p.h_over_omega * p.h_over_omega + delta * delta;
  const cplx P = z * (1.0 - z) * (1.0 - k2 * z);
  const cplx num = a * (1.0 - 2.0 * k2 * z + k2 * z * z) * (1.0 - k2 * z * z) -
                   b * (1.0 - k2 * z * z) * (1.0 - k2 * z * z);
  return num / (P * P) + rabi2 / P;
}

// (1 / 2 pi i) contour integral of V (z - z0)^power around z0, by the
// trapezoid rule on a small circle.
cplx contour_moment(const SimParams& p, double z0, double radius, int power) {
  const int n = 512;
  cplx sum{};
  for (int i = 0; i < n; ++i) {
    const cplx e = std::polar(radius, 2 * pi * i / n);
    sum += potential(z0 + e, p) * std::pow(e, power + 1);
  }
  return sum / static_cast<double>(n);
}

// Algebraic-form residual of y = phi2 at tau, with y_z and y_zz obtained from
// the time-domain solution by the chain rule.
double algebraic_form_residual(const SimParams& p, double tau) {
  const auto c = algebraic_coefficients(p);
  const std::vector<double> grid{0.0, tau};
  const auto phi = evolve({1.0, 0.0}, p, grid, 1e-12).samples.back().rot_state;
  const auto e = elliptic::jacobi(tau, p.k);
  const double delta = p.delta_over_omega();
  const double k2 = p.k * p.k;
  const cplx d1 = rotating_rhs(tau, p, phi).psi2;
  const cplx d2 = -(I * delta * k2 * e.sn * e.cn - delta * delta * k2 * e.sn * e.sn +
                    p.h_over_omega * p.h_over_omega + delta * delta) * phi.psi2;
  const cplx z = z_of_tau(tau, p.k);
  const cplx zp = dz_dtau(tau, p.k);
  // z'' = (1/2) d/dz [z (1 - z) (1 - k^2 z)]
  const cplx zpp = 0.5 * (1.0 - 2.0 * (1.0 + k2) * z + 3.0 * k2 * z * z);
  const cplx yz = d1 / zp;
  const cplx yzz = (d2 - zpp * yz) / (zp * zp);
  const double a = 1.0 / k2;
  const cplx lhs = yzz + (c.a1 / z + c.a2 / (z - 1.0) + c.a3 / (z - a)) * yz +
                   (c.b1 / (z * z) + c.b2 / ((z - 1.0) * (z - 1.0)) + c.b3 / ((z - a) * (z - a)) +
                    c.c1 / z + c.c2 / (z - 1.0) + c.c3 / (z - a)) * phi.psi2;
  return std::abs(lhs) / std::max(1.0, std::abs(phi.psi2));
}

}  // namespace

TEST_CASE("change of variable") {
  const double k = 0.5;
  CHECK(std::abs(sn_shifted_half(0.0, k) - (-I / std::sqrt(k))) < 1e-15);
  CHECK(std::abs(z_of_tau(0.0, k) - cplx(-1.0 / k)) < 1e-14);
  CHECK_THROWS_AS(z_of_tau(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(z_of_tau(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(dz_dtau(1.0, 1.0), DomainError);

  SUBCASE("path stays clear of the singular points") {
    double closest = INFINITY;
    for (int i = 0; i <= 4000; ++i) {
      const cplx z = z_of_tau(4.0 * i / 4000, k);
      closest = std::min({closest, std::abs(z), std::abs(z - 1.0), std::abs(z - 1.0 / (k * k))});
      CHECK(std::abs(std::abs(z) - 1.0 / k) < 1e-12);
    }
    CHECK(closest > 0.05);
  }

  SUBCASE("explicit form equals sn((tau - iK')/2) by the addition theorem") {
    for (double kk : {0.3, 0.5, 0.8}) {
      const double kc = std::sqrt(1 - kk * kk);
      const double Kp = elliptic::complete_elliptic(kk).Kprime;
      // Imaginary transformation: sn(-iy, k) = -i sc(y, k'), cn = nc, dn = dc.
      const auto t = elliptic::jacobi(Kp / 2, kc);
      const cplx snv = -I * t.sn / t.cn;
      const cplx cnv = 1.0 / t.cn;
      const cplx dnv = t.dn / t.cn;
      for (double tau : {0.0, 0.7, 2.9, -4.1, 11.0}) {
        const auto u = elliptic::jacobi(tau / 2, kk);
        const cplx expected = (u.sn * cnv * dnv + snv * u.cn * u.dn) /
                              (1.0 - kk * kk * u.sn * u.sn * snv * snv);
        CHECK(std::abs(sn_shifted_half(tau, kk) - expected) < 1e-12);
      }
    }
  }

  SUBCASE("derivative") {
    auto g = oracle::rng(4);
    for (int i = 0; i < 40; ++i) {
      const double kk = oracle::uniform(g, 0.05, 0.95);
      const double tau = oracle::uniform(g, -10, 10);
      const cplx z = z_of_tau(tau, kk);
      const cplx dz = dz_dtau(tau, kk);
      CHECK(std::abs(dz * dz - z * (1.0 - z) * (1.0 - kk * kk * z)) < 1e-12 * std::max(1.0, std::norm(z) * std::abs(z)));
      const double hstep = 1e-5;
      const cplx fd = (z_of_tau(tau + hstep, kk) - z_of_tau(tau - hstep, kk)) / (2 * hstep);
      CHECK(std::abs(fd - dz) < 1e-8 * std::max(1.0, std::abs(dz)));
    }
  }
}

TEST_CASE("algebraic coefficients") {
  const auto res = algebraic_coefficients(SimParams::from_detuning(0.3, 0.0, 0.6));
  CHECK(res.small_a == 0.0);
  CHECK(res.small_b == 0.0);
  CHECK(res.b1 == 0.0);
  CHECK(res.b2 == 0.0);
  CHECK(res.b3 == 0.0);
  CHECK(res.c1 == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(res.a1 == 0.5);
  CHECK(res.a2 == 0.5);
  CHECK(res.a3 == 0.5);
  CHECK_THROWS_AS(algebraic_coefficients(SimParams::from_detuning(0.3, 0.1, 0.0)), DomainError);

  auto g = oracle::rng(12);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(g);
    const auto c = algebraic_coefficients(p);
    CHECK(std::abs(c.c1 + c.c2 + c.c3) < 1e-12);
    // Residues of the transformed potential by contour integration.
    const double a = 1.0 / (p.k * p.k);
    const std::array<double, 3> pts{0.0, 1.0, a};
    const std::array<double, 3> bs{c.b1, c.b2, c.b3};
    const std::array<double, 3> cs{c.c1, c.c2, c.c3};
    const double radius = 0.25 * std::min(1.0, a - 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      const double scale = std::max(1.0, std::abs(cs[j]));
      CHECK(std::abs(contour_moment(p, pts[j], radius, 0) - cs[j]) < 1e-10 * scale);
      CHECK(std::abs(contour_moment(p, pts[j], radius, 1) - bs[j]) < 1e-10 * scale);
    }
  }
}

TEST_CASE("phi2 satisfies the algebraic form along z(tau)") {
  auto g = oracle::rng(31);
  for (int i = 0; i < 5; ++i) {
    const auto p = random_params(g);
    for (double tau : {0.3, 1.7, 4.0}) CHECK(algebraic_form_residual(p, tau) < 1e-8);
  }
}

TEST_CASE("indicial exponents") {
  const auto e0 = indicial_exponents(SimParams::from_detuning(0.3, 0.0, 0.5));
  CHECK(e0.p_plus == 0.5);
  CHECK(e0.p_minus == 0.0);
  CHECK(e0.q_plus == 0.5);
  CHECK(e0.q_minus == 0.0);
  CHECK(e0.r_plus == 0.5);
  CHECK(e0.r_minus == 0.0);
  CHECK(e0.rho_inf_plus == 0.5);
  CHECK(e0.rho_inf_minus == 0.0);
  CHECK_FALSE(e0.p_degenerate);

  const auto half = indicial_exponents(SimParams::from_detuning(0.3, 0.5, 0.5));
  CHECK(half.p_plus == 0.25);
  CHECK(half.p_minus == 0.25);
  CHECK(half.p_degenerate);
  CHECK(half.q_degenerate);
  CHECK(half.r_plus == 0.75);
  CHECK(half.r_minus == -0.25);
  CHECK(half.r_degenerate);
  CHECK_FALSE(indicial_exponents(SimParams::from_detuning(0.3, 0.2, 0.5)).r_degenerate);

  auto g = oracle::rng(41);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_params(g);
    const auto e = indicial_exponents(p);
    const auto c = algebraic_coefficients(p);
    auto quad = [](double x, double b) { return x * (x - 1) + 0.5 * x + b; };
    CHECK(std::abs(quad(e.p_plus, c.b1)) < 1e-12);
    CHECK(std::abs(quad(e.p_minus, c.b1)) < 1e-12);
    CHECK(std::abs(quad(e.q_plus, c.b2)) < 1e-12);
    CHECK(std::abs(quad(e.q_minus, c.b2)) < 1e-12);
    CHECK(std::abs(quad(e.r_plus, c.b3)) < 1e-12);
    CHECK(std::abs(quad(e.r_minus, c.b3)) < 1e-12);
    CHECK(e.p_plus + e.p_minus == doctest::Approx(0.5));
    // General indicial equation at infinity with singular points 0, 1, 1/k^2.
    const double a3 = 1 / (p.k * p.k);
    const double tail = c.b1 + c.b2 + c.b3 + 0.0 * c.c1 + 1.0 * c.c2 + a3 * c.c3;
    for (double rho : {e.rho_inf_plus, e.rho_inf_minus}) {
      CHECK(std::abs(rho * (rho - 1) + (2 - (c.a1 + c.a2 + c.a3)) * rho + tail) < 1e-12);
    }
  }
}

TEST_CASE("Heun parameters") {
  const double h = 0.3, k = 0.6;
  const auto d = heun_parameters(SimParams::from_detuning(h, 0.0, k));
  CHECK(d.selection.label() == "p-q-r-");
  CHECK(d.gamma == 0.5);
  CHECK(d.delta == 0.5);
  CHECK(d.epsilon == 0.5);
  CHECK(d.alpha == 0.5);
  CHECK(d.beta == 0.0);
  CHECK(d.q_a == doctest::Approx(-h * h / (k * k)).epsilon(1e-14));
  CHECK(d.gamma + d.delta + d.epsilon == doctest::Approx(d.alpha + d.beta + 1));

  CHECK(ExponentSelection::parse("p+q-r+").label() == "p+q-r+");
  CHECK_THROWS_AS(ExponentSelection::parse("pqr"), DomainError);

  auto g = oracle::rng(55);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(g);
    for (const auto sel : ExponentSelection::all()) {
      const auto hd = heun_parameters(p, sel);
      CHECK(std::abs(hd.gamma + hd.delta + hd.epsilon - hd.alpha - hd.beta - 1) < 1e-12);
      const auto rs = riemann_symbol(hd);
      double total = 0;
      for (const auto& pair : rs.exponents) total += pair[0] + pair[1];
      CHECK(total == doctest::Approx(2.0));
    }
  }
}

TEST_CASE("y = w v maps Heun solutions to solutions of the algebraic form") {
  auto g = oracle::rng(66);
  for (int i = 0; i < 6; ++i) {
    const auto p = random_params(g);
    const auto c = algebraic_coefficients(p);
    for (const auto sel : ExponentSelection::all()) {
      const auto d = heun_parameters(p, sel);
      const cplx z0(0.3 + oracle::uniform(g, -0.1, 0.1), 0.8);
      const auto s = local_series(d, SeriesCenter::at(z0), ExponentChoice::Complement, 60);
      const cplx z = z0 + 0.2 * s.radius * std::polar(1.0, oracle::uniform(g, 0, 2 * pi));
      const cplx v = s.value(z), dv = s.derivative(z), d2v = s.second_derivative(z);
      const double a = d.singular_a;
      const cplx lw = d.p / z + d.q / (z - 1.0) + d.r / (z - a);
      const cplx l2 = lw * lw - d.p / (z * z) - d.q / ((z - 1.0) * (z - 1.0)) - d.r / ((z - a) * (z - a));
      // y / w, y' / w, y'' / w
      const cplx y = v, yz = lw * v + dv, yzz = l2 * v + 2.0 * lw * dv + d2v;
      const cplx res = yzz + 0.5 * (1.0 / z + 1.0 / (z - 1.0) + 1.0 / (z - a)) * yz +
                       (c.b1 / (z * z) + c.b2 / ((z - 1.0) * (z - 1.0)) + c.b3 / ((z - a) * (z - a)) +
                        c.c1 / z + c.c2 / (z - 1.0) + c.c3 / (z - a)) * y;
      CHECK(std::abs(res) < 1e-9 * std::max(1.0, std::abs(y)));
    }
  }
}

TEST_CASE("w factor") {
  HeunData d;
  d.singular_a = 4.0;
  CHECK(w_factor(cplx(2.0, 1.0), d) == cplx(1.0));
  d.p = 0.5;
  CHECK(std::abs(w_factor(cplx(4.0, 0.0) + cplx(0, 0), HeunData{.singular_a = 9.0, .p = 0.5}) - 2.0) < 1e-15);
  CHECK_THROWS_AS(w_factor(cplx(1.0), HeunData{.singular_a = 4.0, .q = -0.25}), DomainError);
  CHECK(w_factor(cplx(0.0), HeunData{.singular_a = 4.0, .p = 0.25}) == cplx(0.0));

  // Continuity along closed loops that wind around the singular points.
  auto g = oracle::rng(9);
  for (int i = 0; i < 10; ++i) {
    const auto data = heun_parameters(random_params(g), ExponentSelection::all()[static_cast<std::size_t>(i % 8)]);
    const double a = data.singular_a;
    const double radius = 0.5 * (1.0 + a);
    std::vector<cplx> path;
    for (int j = 0; j <= 4000; ++j) path.push_back(std::polar(radius, 0.01 + 4 * pi * j / 4000));
    const auto w = w_factor_along(path, data);
    const double gap = std::min(radius - 1.0, a - radius);
    const double bound_rate = (std::abs(data.p) + std::abs(data.q) + std::abs(data.r)) / gap;
    for (std::size_t j = 1; j < w.size(); ++j) {
      const double dz = std::abs(path[j] - path[j - 1]);
      CHECK(std::abs(w[j] - w[j - 1]) <= 1.01 * std::abs(w[j - 1]) * (std::exp(bound_rate * dz) - 1.0) + 1e-15);
      CHECK(std::abs(std::abs(w[j]) - std::abs(w_factor(path[j], data))) < 1e-12 * std::abs(w[j]));
    }
    CHECK(std::abs(w.front() - w_factor(path.front(), data)) < 1e-14 * std::abs(w.front()));
  }
}

TEST_CASE("local series") {
  auto g = oracle::rng(77);
  for (int i = 0; i < 8; ++i) {
    const auto p = random_params(g);
    const auto d = heun_parameters(p, ExponentSelection::all()[static_cast<std::size_t>(i)]);
    const std::array<SeriesCenter, 4> centers{SeriesCenter{CenterKind::Zero}, SeriesCenter{CenterKind::One},
                                              SeriesCenter{CenterKind::SingularA},
                                              SeriesCenter::at(cplx(0.5, -1.5))};
    for (const auto& center : centers) {
      for (auto choice : {ExponentChoice::Analytic, ExponentChoice::Complement}) {
        const auto s = local_series(d, center, choice, 40);
        if (s.requires_log) continue;
        const auto longer = local_series(d, center, choice, 80);
        for (int j = 0; j < 5; ++j) {
          const cplx z = s.center + 0.25 * s.radius * std::polar(1.0, 0.3 + 2 * pi * j / 5);
          const cplx v = s.value(z);
          const double scale = std::max({1.0, std::abs(v), std::abs(s.derivative(z))});
          CHECK(std::abs(heun_residual(d, z, v, s.derivative(z), s.second_derivative(z))) < 1e-10 * scale);
          CHECK(std::abs(longer.value(z) - v) < 1e-12 * scale);
        }
      }
    }
  }

  SUBCASE("first coefficient at the origin") {
    const auto p = SimParams::from_detuning(0.3, 0.12, 0.6);
    const auto d = heun_parameters(p);
    const auto s = local_series(d, {CenterKind::Zero}, ExponentChoice::Analytic, 16);
    CHECK(std::abs(s.coefficients[1] / s.coefficients[0] - d.q_a * 0.36 / d.gamma) < 1e-14);
  }

  SUBCASE("integer exponent gap is flagged") {
    const auto half = heun_parameters(SimParams::from_detuning(0.3, 0.5, 0.6));
    CHECK(local_series(half, {CenterKind::Zero}, ExponentChoice::Complement, 16).requires_log);
    CHECK_FALSE(local_series(half, {CenterKind::Zero}, ExponentChoice::Analytic, 16).requires_log);
    const auto gap_one = heun_parameters(SimParams::from_detuning(0.3, 1.5, 0.6));
    CHECK(local_series(gap_one, {CenterKind::Zero}, ExponentChoice::Analytic, 16).requires_log);
  }

  CHECK_THROWS_AS(local_series(heun_parameters(SimParams::from_detuning(0.3, 0.1, 0.6)), {CenterKind::Zero},
                               ExponentChoice::Analytic, 4),
                  PreconditionError);
}

TEST_CASE("analytic continuation") {
  const auto p = SimParams::from_detuning(0.25, 0.07, 0.55);
  const auto d = heun_parameters(p);
  const auto path = tau_path(6.0, p.k);
  const SolutionPair init{cplx(0.3, 0.1), cplx(-0.2, 0.4), cplx(1.0, -0.5), cplx(0.1, 0.0)};

  SUBCASE("zero-length path") {
    const std::vector<cplx> single{path.front()};
    const auto r = continue_along_path(d, single, init);
    CHECK(r.end.v1 == init.v1);
    CHECK(r.end.dv2 == init.dv2);
    CHECK(r.steps == 0);
  }
  SUBCASE("reversibility") {
    const auto fwd = continue_along_path(d, path, init);
    std::vector<cplx> back(path.rbegin(), path.rend());
    const auto rev = continue_along_path(d, back, fwd.end);
    CHECK(std::abs(rev.end.v1 - init.v1) < 1e-9);
    CHECK(std::abs(rev.end.dv1 - init.dv1) < 1e-9);
    CHECK(std::abs(rev.end.v2 - init.v2) < 1e-9);
    CHECK(std::abs(rev.end.dv2 - init.dv2) < 1e-9);
    CHECK(fwd.wronskian_error < 1e-8);
  }
  SUBCASE("step refinement") {
    std::vector<cplx> sparse;
    for (std::size_t i = 0; i < path.size(); i += 20) sparse.push_back(path[i]);
    sparse.push_back(path.back());
    const auto coarse = continue_along_path(d, sparse, init, {64, 0.5});
    const auto fine = continue_along_path(d, sparse, init, {64, 0.25});
    CHECK(fine.steps > coarse.steps);
    CHECK(std::abs(fine.end.v1 - coarse.end.v1) < 1e-9);
    CHECK(std::abs(fine.end.v2 - coarse.end.v2) < 1e-9);
    CHECK(std::abs(fine.end.dv2 - coarse.end.dv2) < 1e-9);
  }
  SUBCASE("errors") {
    const std::vector<cplx> through{cplx(0.5, 0.5), cplx(1.0, 0.0), cplx(1.5, -0.5)};
    CHECK_THROWS_AS(continue_along_path(d, through, init), PathError);
    const std::vector<cplx> grazing{cplx(0.5, 1e-300), cplx(1.5, 1e-300)};
    CHECK_THROWS_AS(continue_along_path(d, grazing, init), PathError);
    CHECK_THROWS_AS(continue_along_path(d, path, init, {8, 0.9}), StepError);
  }
}

TEST_CASE("flip probability from Heun solutions") {
  CHECK(flip_probability_heun(0.0, SimParams::from_detuning(0.2, 0.1, 0.5)) == 0.0);
  CHECK_THROWS_AS(flip_probability_heun(1.0, SimParams::from_detuning(0.2, 0.1, 0.0)), DomainError);

  const double s = std::sin(0.2);
  CHECK(std::abs(flip_probability_heun(1.0, SimParams::from_detuning(0.2, 0.0, 0.5)) - s * s) < 1e-6);

  const auto p = SimParams::from_detuning(0.2, 0.1, 0.5);
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
  const auto traj = evolve({1.0, 0.0}, p, grid, 1e-12);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double expected = traj.samples[i].p_flip;
    for (const auto sel : ExponentSelection::all()) {
      CHECK(std::abs(flip_probability_heun(grid[i], p, sel) - expected) < 1e-6);
    }
  }
}
