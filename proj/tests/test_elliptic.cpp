#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ellipspin/elliptic.hpp"
#include "ellipspin/error.hpp"
#include "oracles.hpp"

using namespace ellipspin;
using namespace ellipspin::elliptic;

TEST_CASE("complete elliptic integral") {
  SUBCASE("k = 0 gives pi/2") {
    const auto q = complete_elliptic(0.0);
    CHECK(q.K == doctest::Approx(std::numbers::pi / 2).epsilon(1e-16));
    CHECK(std::isinf(q.Kprime));
  }
  SUBCASE("complementary quarter period") {
    CHECK(std::abs(complete_elliptic(0.8).Kprime - complete_elliptic(0.6).K) < 1e-12);
  }
  SUBCASE("matches quadrature") {
    const double expected = oracle::elliptic_k(0.5);
    CHECK(std::abs(expected - 1.6857503548125961) < 1e-12);  // frozen oracle value
    CHECK(std::abs(complete_elliptic(0.5).K - expected) < 1e-10);
    for (double k : {0.1, 0.3, 0.7, 0.9, 0.99}) {
      CHECK(std::abs(complete_elliptic(k).K - oracle::elliptic_k(k)) < 1e-10);
    }
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(complete_elliptic(1.0), DomainError);
    CHECK_THROWS_AS(complete_elliptic(1.5), DomainError);
    CHECK_THROWS_AS(complete_elliptic(-0.1), DomainError);
    CHECK_THROWS_AS(complete_elliptic(NAN), DomainError);
  }
}

TEST_CASE("jacobi limits") {
  for (double k : {0.0, 0.3, 0.99, 1.0}) {
    const auto t = jacobi(0.0, k);
    CHECK(t.sn == 0.0);
    CHECK(t.cn == 1.0);
    CHECK(t.dn == 1.0);
  }
  for (double u : {-3.0, -0.4, 0.7, 2.5, 40.0}) {
    const auto trig = jacobi(u, 0.0);
    CHECK(trig.sn == std::sin(u));
    CHECK(trig.cn == std::cos(u));
    CHECK(trig.dn == 1.0);
    const auto hyp = jacobi(u, 1.0);
    CHECK(hyp.sn == std::tanh(u));
    CHECK(hyp.cn == 1.0 / std::cosh(u));
    CHECK(hyp.dn == hyp.cn);
  }
  // Small k converges to the trigonometric values continuously.
  const auto near = jacobi(1.1, 1e-9);
  CHECK(std::abs(near.sn - std::sin(1.1)) < 1e-12);
  CHECK_THROWS_AS(jacobi(INFINITY, 0.5), DomainError);
  CHECK_THROWS_AS(jacobi(1.0, 1.01), DomainError);
  CHECK_THROWS_AS(jacobi(1.0, -0.2), DomainError);
}

TEST_CASE("identity residuals") {
  auto r = jacobi_identity_residuals({0.0, 1.0, 1.0}, 0.3);
  CHECK(r.first == 0.0);
  CHECK(r.second == 0.0);
  r = jacobi_identity_residuals(jacobi(1.2, 0.7), 0.7);
  CHECK(r.first < 1e-12);
  CHECK(r.second < 1e-12);
  r = jacobi_identity_residuals({0.5, 0.5, 1.0}, 0.5);
  CHECK(r.first == doctest::Approx(0.5));
}

TEST_CASE("identities on a grid over [-4K, 4K]") {
  for (double k : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99}) {
    const double K = complete_elliptic(k).K;
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double u = -4 * K + 8 * K * i / 400.0;
      const auto t = jacobi(u, k);
      const auto [a, b] = jacobi_identity_residuals(t, k);
      worst = std::max({worst, a, b});
      CHECK(t.dn >= std::sqrt(1 - k * k) - 1e-12);
      CHECK(t.dn <= 1.0 + 1e-12);
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("periodicity and large arguments") {
  for (double k : {0.2, 0.6, 0.95}) {
    const double K = complete_elliptic(k).K;
    for (double u : {0.1, 1.3, -2.2}) {
      const auto a = jacobi(u, k);
      const auto b = jacobi(u + 4 * K, k);
      CHECK(std::abs(a.sn - b.sn) < 1e-10);
      CHECK(std::abs(a.cn - b.cn) < 1e-10);
      CHECK(std::abs(a.dn - b.dn) < 1e-10);
      const auto far = jacobi(u + 400 * K, k);
      CHECK(std::abs(a.sn - far.sn) < 1e-10);
    }
    // Quarter and half period values.
    CHECK(std::abs(jacobi(K, k).sn - 1.0) < 1e-12);
    CHECK(std::abs(jacobi(K, k).dn - std::sqrt(1 - k * k)) < 1e-12);
    CHECK(std::abs(jacobi(2 * K, k).cn + 1.0) < 1e-12);
  }
}

TEST_CASE("sn inverts the incomplete integral") {
  auto g = oracle::rng(17);
  for (int i = 0; i < 20; ++i) {
    const double k = oracle::uniform(g, 0.0, 0.99);
    const double phi = oracle::uniform(g, -1.5, 1.5);
    const double u = oracle::elliptic_f(phi, k);
    CHECK(std::abs(jacobi(u, k).sn - std::sin(phi)) < 1e-9);
  }
}

TEST_CASE("half-argument composition") {
  auto g = oracle::rng(3);
  for (int i = 0; i < 50; ++i) {
    const double k = oracle::uniform(g, 0.0, 0.99);
    const double tau = oracle::uniform(g, -20.0, 20.0);
    const auto h = jacobi(tau / 2, k);
    const double denom = 1.0 - k * k * std::pow(h.sn, 4);
    const double sn = 2 * h.sn * h.cn * h.dn / denom;
    const double dn = (h.dn * h.dn - k * k * h.sn * h.sn * h.cn * h.cn) / denom;
    const double cn = (h.cn * h.cn - h.sn * h.sn * h.dn * h.dn) / denom;
    const auto full = jacobi(tau, k);
    CHECK(std::abs(sn - full.sn) < 1e-10);
    CHECK(std::abs(cn - full.cn) < 1e-10);
    CHECK(std::abs(dn - full.dn) < 1e-10);
  }
}
