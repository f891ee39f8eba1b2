#include "ellipspin/wigner.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "ellipspin/error.hpp"

namespace ellipspin {

namespace {

constexpr int kMaxTwoJ = static_cast<int>(2 * kMaxSpin);

const std::array<double, 2 * kMaxTwoJ + 2>& log_factorials() {
  static const auto table = [] {
    std::array<double, 2 * kMaxTwoJ + 2> t{};
    for (std::size_t n = 1; n < t.size(); ++n) t[n] = t[n - 1] + std::log(static_cast<double>(n));
    return t;
  }();
  return table;
}

double lf(int n) { return log_factorials()[static_cast<std::size_t>(n)]; }

int twice_spin(double j) {
  const double twice = 2.0 * j;
  if (!std::isfinite(j) || j < 0.0 || std::abs(twice - std::round(twice)) > 1e-12) {
    throw DomainError("spin must be a non-negative half-integer");
  }
  if (j > kMaxSpin) throw DomainError("spin above " + std::to_string(kMaxSpin) + " is not supported");
  return static_cast<int>(std::lround(twice));
}

// Index i with m = j - i.
int projection_index(int two_j, double m) {
  const double i = 0.5 * two_j - m;
  if (!std::isfinite(m) || std::abs(i - std::round(i)) > 1e-12 || i < -1e-12 || i > two_j + 1e-12) {
    throw DomainError("projection out of range for this spin");
  }
  return static_cast<int>(std::lround(i));
}

struct SumLimits {
  int lo, hi;
  int jpm, jmm, jpmp, jmmp;  // j+m, j-m, j+m', j-m'
};

SumLimits limits(int two_j, int row, int col) {
  SumLimits s{};
  s.jmm = row;
  s.jpm = two_j - row;
  s.jmmp = col;
  s.jpmp = two_j - col;
  // m' - m = row - col
  s.lo = std::max(0, col - row);
  s.hi = std::min(s.jpm, s.jmmp);
  return s;
}

// sum_nu (-1)^nu x^(2nu - m + m') y^(2j - 2nu + m - m') / (...) times the
// square root prefactor, accumulated in a fixed order.
double reduced_d(int two_j, int row, int col, double s, double c) {
  const auto lim = limits(two_j, row, col);
  const double half = 0.5 * (lf(lim.jpm) + lf(lim.jmm) + lf(lim.jpmp) + lf(lim.jmmp));
  const int dm = row - col;  // m' - m
  double sum = 0.0;
  for (int nu = lim.lo; nu <= lim.hi; ++nu) {
    const int ps = 2 * nu + dm;
    const int pc = two_j - 2 * nu - dm;
    const double denom = lf(nu) + lf(nu + dm) + lf(lim.jpm - nu) + lf(lim.jmmp - nu);
    const double term = std::exp(half - denom) * std::pow(s, ps) * std::pow(c, pc);
    sum += (nu % 2 == 0) ? term : -term;
  }
  return sum;
}

}  // namespace

cplx SpinJMatrix::element(double m, double m_prime) const {
  const int two_j = twice_spin(j);
  return (*this)(projection_index(two_j, m), projection_index(two_j, m_prime));
}

double SpinJMatrix::unitarity_error() const {
  double worst = 0.0;
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      cplx acc{};
      for (int r = 0; r < dim; ++r) acc += std::conj((*this)(r, a)) * (*this)(r, b);
      worst = std::max(worst, std::abs(acc - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

EulerAngles euler_angles(const Propagator& u) {
  if (!(u.unitarity_error() <= 1e-9)) throw DomainError("propagator is not unitary");
  const cplx phase = std::sqrt(u.determinant());
  const cplx a = u.u11 / phase;
  const cplx b = u.u21 / phase;

  EulerAngles e;
  e.theta = 2.0 * std::atan2(std::abs(b), std::abs(a));
  const double sum = std::abs(a) > 0.0 ? 2.0 * std::arg(a) : 0.0;
  const double diff = std::abs(b) > 0.0 ? -2.0 * std::arg(b / cplx(0.0, 1.0)) : 0.0;
  e.phi = 0.5 * (sum + diff);
  e.psi = 0.5 * (sum - diff);
  return e;
}

SpinJMatrix wigner_d(double j, const EulerAngles& angles) {
  const int two_j = twice_spin(j);
  SpinJMatrix d;
  d.j = 0.5 * two_j;
  d.dim = two_j + 1;
  d.entries.assign(static_cast<std::size_t>(d.dim * d.dim), cplx{});
  const double s = std::sin(0.5 * angles.theta);
  const double c = std::cos(0.5 * angles.theta);
  static constexpr std::array<cplx, 4> i_pow{cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
  for (int row = 0; row < d.dim; ++row) {
    const double m = d.j - row;
    for (int col = 0; col < d.dim; ++col) {
      const double mp = d.j - col;
      const int dm = row - col;
      const cplx ip = i_pow[static_cast<std::size_t>(((dm % 4) + 4) % 4)];
      d(row, col) = ip * std::polar(1.0, m * angles.phi + mp * angles.psi) * reduced_d(two_j, row, col, s, c);
    }
  }
  return d;
}

double transition_probability_j(double j, double m, double m_prime, double theta) {
  const int two_j = twice_spin(j);
  const int row = projection_index(two_j, m);
  const int col = projection_index(two_j, m_prime);
  const double s = std::sin(0.5 * theta);
  const double c = std::cos(0.5 * theta);
  if (std::abs(c) < std::abs(s)) {
    const double r = reduced_d(two_j, row, col, s, c);
    return r * r;
  }
  const auto lim = limits(two_j, row, col);
  const double t = s / c;
  const int dm = row - col;
  double sum = 0.0;
  for (int nu = lim.lo; nu <= lim.hi; ++nu) {
    const double denom = lf(nu) + lf(nu + dm) + lf(lim.jpm - nu) + lf(lim.jmmp - nu);
    const double term = std::exp(-denom) * std::pow(t, 2 * nu + dm);
    sum += (nu % 2 == 0) ? term : -term;
  }
  const double pre = std::exp(lf(lim.jpm) + lf(lim.jmm) + lf(lim.jpmp) + lf(lim.jmmp));
  return pre * std::pow(c, 2 * two_j) * sum * sum;
}

}  // namespace ellipspin
