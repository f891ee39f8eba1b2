#pragma once

// Adaptive Dormand-Prince 5(4) stepper for small complex systems. The
// integration lands exactly on every requested output point, so no
// interpolation error enters the sampled solution.
//
// The local error estimate is held below tol * min(h, 1) (error per unit
// step), so the error accumulated over an interval grows with its length
// rather than with the number of steps taken.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ellipspin/error.hpp"

namespace ellipspin::detail {

template <std::size_t N>
using CState = std::array<std::complex<double>, N>;

struct Dopri5Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

template <std::size_t N, class Rhs>
std::vector<CState<N>> dopri5_sample(Rhs&& rhs, CState<N> y, std::span<const double> grid,
                                     double tol, Dopri5Stats* stats = nullptr) {
  using S = CState<N>;
  constexpr double kSafety = 0.9;
  constexpr double kMinFactor = 0.2;
  constexpr double kMaxFactor = 5.0;
  constexpr std::size_t kMaxSteps = 50'000'000;

  auto axpy = [](const S& base, double h, std::initializer_list<std::pair<double, const S*>> terms) {
    S out = base;
    for (const auto& [coef, k] : terms) {
      if (coef == 0.0) continue;
      for (std::size_t i = 0; i < N; ++i) out[i] += (h * coef) * (*k)[i];
    }
    return out;
  };

  std::vector<S> out;
  out.reserve(grid.size());
  if (grid.empty()) return out;
  out.push_back(y);

  double t = grid.front();
  double h = std::min(0.5 * std::pow(tol, 0.2), 0.1);
  S k1 = rhs(t, y);
  std::size_t steps = 0;

  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double target = grid[g];
    while (t < target) {
      if (++steps > kMaxSteps) {
        throw IntegrationError("integrator exceeded step budget", t);
      }
      const bool clipped = t + h >= target;
      const double step = clipped ? target - t : h;
      if (step <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)) &&
          !clipped) {
        throw IntegrationError("step size underflow at tau = " + std::to_string(t), t);
      }

      const S k2 = rhs(t + dp::c2 * step, axpy(y, step, {{dp::a21, &k1}}));
      const S k3 = rhs(t + dp::c3 * step, axpy(y, step, {{dp::a31, &k1}, {dp::a32, &k2}}));
      const S k4 = rhs(t + dp::c4 * step,
                       axpy(y, step, {{dp::a41, &k1}, {dp::a42, &k2}, {dp::a43, &k3}}));
      const S k5 = rhs(t + dp::c5 * step, axpy(y, step,
                                               {{dp::a51, &k1}, {dp::a52, &k2}, {dp::a53, &k3},
                                                {dp::a54, &k4}}));
      const S k6 = rhs(t + step, axpy(y, step,
                                      {{dp::a61, &k1}, {dp::a62, &k2}, {dp::a63, &k3},
                                       {dp::a64, &k4}, {dp::a65, &k5}}));
      const S y_new = axpy(y, step,
                           {{dp::b1, &k1}, {dp::b3, &k3}, {dp::b4, &k4}, {dp::b5, &k5},
                            {dp::b6, &k6}});
      const S k7 = rhs(t + step, y_new);

      double err2 = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const std::complex<double> e =
            step * (dp::e1 * k1[i] + dp::e3 * k3[i] + dp::e4 * k4[i] + dp::e5 * k5[i] +
                    dp::e6 * k6[i] + dp::e7 * k7[i]);
        const double scale = tol + tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err2 += std::norm(e) / (scale * scale);
      }
      const double err = std::sqrt(err2 / static_cast<double>(N)) / std::min(step, 1.0);

      if (err <= 1.0) {
        t = clipped ? target : t + step;
        y = y_new;
        k1 = k7;
        if (stats) ++stats->accepted;
        const double factor =
            err == 0.0 ? kMaxFactor : std::clamp(kSafety * std::pow(err, -0.25), kMinFactor, kMaxFactor);
        // A step shortened to hit the grid says nothing about the natural size.
        h = clipped ? std::max(h, step * factor) : step * factor;
      } else {
        if (stats) ++stats->rejected;
        h = step * std::max(kMinFactor, kSafety * std::pow(err, -0.25));
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
          throw IntegrationError("step size underflow at tau = " + std::to_string(t), t);
        }
      }
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace ellipspin::detail
