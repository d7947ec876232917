#include "pforge/elliptic.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "pforge/errors.hpp"

namespace pforge::elliptic {

namespace {
constexpr int kMaxAgmSteps = 40;
constexpr double kAgmTol = 1e-15;
}  // namespace

Modulus::Modulus(double m) : m_(m) {
  if (!(m >= 0.0 && m < 1.0)) throw ContractError("elliptic parameter m must lie in [0, 1)");
}

double agm(double a, double g) {
  for (int i = 0; i < kMaxAgmSteps && std::abs(a - g) >= kAgmTol * a; ++i) {
    const double next = 0.5 * (a + g);
    g = std::sqrt(a * g);
    a = next;
  }
  return a;
}

double complete_K(Modulus m) { return std::numbers::pi / (2.0 * agm(1.0, std::sqrt(1.0 - m.m()))); }

double amplitude(double u, Modulus m) {
  std::array<double, kMaxAgmSteps + 1> a{};
  std::array<double, kMaxAgmSteps + 1> c{};
  a[0] = 1.0;
  double b = std::sqrt(1.0 - m.m());
  c[0] = std::sqrt(m.m());
  int n = 0;
  while (n < kMaxAgmSteps && std::abs(c[n]) >= kAgmTol * a[n]) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int k = n; k > 0; --k) phi = 0.5 * (phi + std::asin(c[k] * std::sin(phi) / a[k]));
  return phi;
}

SnCnDn jacobi_sn_cn_dn(double u, Modulus m) {
  const double phi = amplitude(u, m);
  const double sn = std::sin(phi);
  const double cn = std::cos(phi);
  return {sn, cn, std::sqrt(1.0 - m.m() * sn * sn)};
}

double inverse_amplitude(double phi, Modulus m) {
  // am is strictly increasing with am' = dn >= sqrt(1 - m) > 0.
  const double k = complete_K(m);
  double u = phi * k / (0.5 * std::numbers::pi);
  for (int i = 0; i < 60; ++i) {
    const double r = amplitude(u, m) - phi;
    const double dn = jacobi_sn_cn_dn(u, m).dn;
    const double step = r / dn;
    u -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(u))) break;
  }
  return u;
}

}  // namespace pforge::elliptic
