#include "pforge/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "pforge/errors.hpp"
#include "pforge/parallel.hpp"

namespace pforge {

namespace {

constexpr double kNewtonTol = 1e-11;
constexpr int kNewtonMaxIter = 50;
constexpr double kClassifyTol = 1e-10;

Vec lagrange_residual(const ScalarField& h, const ScalarField& psi, double m, const Vec& x) {
  return h.gradient(x) - m * psi.gradient(x);
}

std::complex<double> cubic_value(double a, double b, double c, std::complex<double> z) {
  return ((z + a) * z + b) * z + c;
}

std::complex<double> polish(double a, double b, double c, std::complex<double> z) {
  for (int i = 0; i < 3; ++i) {
    const std::complex<double> d = (3.0 * z + 2.0 * a) * z + b;
    if (std::abs(d) == 0.0) break;
    const std::complex<double> next = z - cubic_value(a, b, c, z) / d;
    if (!(std::abs(cubic_value(a, b, c, next)) < std::abs(cubic_value(a, b, c, z)))) break;
    z = next;
  }
  return z;
}

// One real root of z^3 + a z^2 + b z + c, the largest in magnitude when all three are real.
double real_root(double a, double b, double c) {
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  double y;
  if (disc >= 0.0) {
    const double u = std::cbrt(-q / 2.0 - std::copysign(std::sqrt(disc), q));
    y = u != 0.0 ? u - p / (3.0 * u) : 0.0;
  } else {
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double theta = std::acos(std::clamp(3.0 * q / (p * r), -1.0, 1.0));
    y = r * std::cos(theta / 3.0);
    for (int k = 1; k < 3; ++k) {
      const double yk = r * std::cos(theta / 3.0 - 2.0 * std::numbers::pi * k / 3.0);
      if (std::abs(yk - a / 3.0) > std::abs(y - a / 3.0)) y = yk;
    }
  }
  return polish(a, b, c, y - a / 3.0).real();
}

std::string relation_of(const StabilityReport& r) {
  if (r.classification == Classification::degenerate || r.casimir_slope == 0.0) return "inconsistent";
  const bool elliptic = r.classification == Classification::elliptic;
  const bool negative = r.casimir_slope < 0.0;
  return elliptic == negative ? "elliptic<=>slope<0" : "elliptic<=>slope>0";
}

}  // namespace

std::string to_string(Classification c) {
  switch (c) {
    case Classification::elliptic:
      return "elliptic";
    case Classification::hyperbolic:
      return "hyperbolic";
    case Classification::degenerate:
      return "degenerate";
  }
  return "degenerate";
}

CriticalPoint solve_critical(const ScalarField& h, const ScalarField& psi, double multiplier, const StatePoint& x0) {
  Vec x = x0;
  Vec r = lagrange_residual(h, psi, multiplier, x);
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    if (!r.allFinite()) throw NumericalError("solve_critical: residual is not finite (seed outside the domain?)");
    if (r.norm() < kNewtonTol) return {x, multiplier, ""};
    const Mat jac = h.hessian(x) - multiplier * psi.hessian(x);
    Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    if (sv[0] == 0.0 || sv[sv.size() - 1] < 1e-13 * sv[0]) {
      std::ostringstream msg;
      msg << "solve_critical: singular Newton matrix (condition estimate "
          << (sv[sv.size() - 1] == 0.0 ? INFINITY : sv[0] / sv[sv.size() - 1]) << ")";
      throw NumericalError(msg.str());
    }
    const Vec step = svd.solve(r);
    // Backtracking keeps the iteration inside the basin when the seed is rough.
    double alpha = 1.0;
    Vec trial = x - step;
    Vec rt = lagrange_residual(h, psi, multiplier, trial);
    while (!(rt.allFinite() && rt.norm() < r.norm()) && alpha > 1.0 / 64) {
      alpha *= 0.5;
      trial = x - alpha * step;
      rt = lagrange_residual(h, psi, multiplier, trial);
    }
    x = trial;
    r = rt;
  }
  if (r.allFinite() && r.norm() < kNewtonTol) return {x, multiplier, ""};
  std::ostringstream msg;
  msg << "solve_critical: no convergence in " << kNewtonMaxIter << " iterations (residual " << r.norm() << ")";
  throw NumericalError(msg.str());
}

Mat linearize_flow(const VectorField& f, const StatePoint& x) {
  const double fx = f(x).norm();
  if (!(fx < 1e-8)) std::clog << "warning: linearizing " << f.name() << " at a non-equilibrium (|f| = " << fx << ")\n";
  return f.jacobian(x);
}

Mat linearize_poisson(const PoissonStructure& p, const ScalarField& h, const ScalarField& psi,
                      const CriticalPoint& cp) {
  if (p.dim() != 3) throw ContractError("linearize_poisson: 3D Casimir-form structure required");
  return p.matrix(cp.state) * (h.hessian(cp.state) - cp.multiplier * psi.hessian(cp.state));
}

std::array<std::complex<double>, 3> eigenvalues_3x3(const Mat& m) {
  if (m.rows() != 3 || m.cols() != 3) throw ContractError("eigenvalues_3x3: 3x3 matrix required");
  if (!m.allFinite()) throw ContractError("eigenvalues_3x3: non-finite entries");
  // det(z I - M) = z^3 + a z^2 + b z + c
  const double a = -m.trace();
  const double b = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                   m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double c = -m.determinant();

  const double r = real_root(a, b, c);
  // Deflate: z^2 + (a + r) z + (b + r (a + r))
  const double qb = a + r;
  const double qc = b + r * qb;
  const double disc = qb * qb - 4.0 * qc;
  std::complex<double> z1, z2;
  if (disc >= 0.0) {
    const double s = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
    z1 = s;
    z2 = s != 0.0 ? qc / s : 0.0;
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    z1 = {-0.5 * qb, im};
    z2 = {-0.5 * qb, -im};
  }
  if (disc >= 0.0) {
    z1 = polish(a, b, c, z1);
    z2 = polish(a, b, c, z2);
  }
  std::array<std::complex<double>, 3> ev{std::complex<double>(r, 0.0), z1, z2};
  std::sort(ev.begin(), ev.end(), [](const auto& u, const auto& v) {
    if (std::abs(u.imag()) != std::abs(v.imag())) return std::abs(u.imag()) < std::abs(v.imag());
    if (u.real() != v.real()) return u.real() < v.real();
    return u.imag() < v.imag();
  });
  return ev;
}

double mu_squared(const std::array<std::complex<double>, 3>& ev) {
  std::size_t zero = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (std::abs(ev[i]) < std::abs(ev[zero])) zero = i;
  std::complex<double> sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    if (i != zero) sum += ev[i] * ev[i];
  return 0.5 * sum.real();
}

Classification classify(double mu2) {
  if (mu2 < -kClassifyTol) return Classification::elliptic;
  if (mu2 > kClassifyTol) return Classification::hyperbolic;
  return Classification::degenerate;
}

double default_slope_step(double multiplier) { return 1e-4 * std::max(1.0, std::abs(multiplier)); }

CasimirSlope casimir_slope(const ScalarField& h, const ScalarField& psi, const CriticalPoint& cp, double delta) {
  if (!(delta > 0.0)) throw ContractError("casimir_slope: delta must be positive");
  const CriticalPoint plus = solve_critical(h, psi, cp.multiplier + delta, cp.state);
  const CriticalPoint minus = solve_critical(h, psi, cp.multiplier - delta, cp.state);
  return {(psi(plus.state) - psi(minus.state)) / (2.0 * delta), (h(plus.state) - h(minus.state)) / (2.0 * delta)};
}

StructurePair make_structure_pair(const SystemDef& sys, std::string_view label) {
  StructurePair pair{sys.name, std::string(label), make_structure(sys, label), 1, "lambda", 1.0, Vec(3)};
  if (!pair.reg.psi) throw ConfigError("structure " + pair.label + " has no Casimir split");
  if (sys.name == "example1") {
    pair.anchor_seed << 0.8, 0.4, 1.5;
    if (label == "pois2") pair.multiplier_name = "beta";
  } else if (sys.name == "example2") {
    // Critical points there are written with grad H + lambda grad Psi = 0.
    pair.anchor_seed << 0.9, -0.9, 0.1;
    if (label == "pois12") {
      pair.multiplier_sign = -1;
    } else {
      pair.multiplier_name = "beta";
      pair.anchor = -1.0;
    }
  } else {
    throw ConfigError("system " + sys.name + " has no isolated critical curve; use relative equilibria");
  }
  return pair;
}

CriticalPoint critical_point_at(const StructurePair& pair, double reported_multiplier) {
  const ScalarField& h = pair.reg.hamiltonian;
  const ScalarField& psi = *pair.reg.psi;
  const double m_anchor = pair.multiplier_sign * pair.anchor;
  const double m_target = pair.multiplier_sign * reported_multiplier;
  CriticalPoint cp = solve_critical(h, psi, m_anchor, pair.anchor_seed);
  // Natural-parameter continuation: geometric steps of at most 10% when the
  // sign is kept, uniform steps otherwise.
  int steps;
  if (m_anchor * m_target > 0.0) {
    steps = static_cast<int>(std::ceil(std::abs(std::log(m_target / m_anchor)) / std::log(1.1)));
  } else {
    steps = 40;
  }
  for (int k = 1; k <= steps; ++k) {
    const double frac = static_cast<double>(k) / steps;
    const double m = m_anchor * m_target > 0.0 ? m_anchor * std::pow(m_target / m_anchor, frac)
                                               : m_anchor + (m_target - m_anchor) * frac;
    cp = solve_critical(h, psi, m, cp.state);
  }
  cp.multiplier = m_target;
  cp.structure_label = pair.label;
  return cp;
}

StabilityReport stability_at(const SystemDef& sys, const StructurePair& pair, double reported_multiplier) {
  StabilityReport rep;
  rep.multiplier = reported_multiplier;
  rep.critical_point = critical_point_at(pair, reported_multiplier);
  const ScalarField& h = pair.reg.hamiltonian;
  const ScalarField& psi = *pair.reg.psi;
  rep.linearization = linearize_poisson(pair.reg.structure, h, psi, rep.critical_point);
  rep.flow_linearization = linearize_flow(sys.flow, rep.critical_point.state);
  rep.eigenvalues = eigenvalues_3x3(rep.linearization);
  rep.mu_squared = mu_squared(rep.eigenvalues);
  rep.classification = classify(rep.mu_squared);
  const CasimirSlope s =
      casimir_slope(h, psi, rep.critical_point, default_slope_step(rep.critical_point.multiplier));
  // d/d(reported) = multiplier_sign d/dm
  rep.casimir_slope = pair.multiplier_sign * s.dpsi_dm;
  rep.hamiltonian_slope = pair.multiplier_sign * s.dh_dm;
  return rep;
}

BridgesAudit bridges_report(const SystemDef& sys, const StructurePair& pair, const std::vector<double>& grid,
                            const std::string& reference_relation) {
  BridgesAudit audit{sys.name, pair.label, std::vector<StabilityReport>(grid.size()), "inconsistent", false};
  parallel_for(grid.size(), [&](std::size_t i) { audit.reports[i] = stability_at(sys, pair, grid[i]); });
  if (!audit.reports.empty()) {
    audit.relation = relation_of(audit.reports.front());
    for (const auto& r : audit.reports)
      if (relation_of(r) != audit.relation) audit.relation = "inconsistent";
  }
  audit.matches_reference = reference_relation.empty() || reference_relation == audit.relation;
  return audit;
}

CriticalPoint euler_relative_equilibrium(const SystemDef& sys, std::string_view label, double a) {
  if (sys.name != "euler") throw ConfigError("relative equilibria are registered for the Euler top only");
  const double i2 = sys.params.inertia[1];
  double m;
  if (label == "euler1")
    m = 1.0 / (2.0 * i2);
  else if (label == "euler2")
    m = i2;
  else
    throw ConfigError("no structure '" + std::string(label) + "' registered for system euler");
  Vec x(3);
  x << 0.0, a, 0.0;
  return {x, m, std::string(label)};
}

}  // namespace pforge
