#include "pforge/hj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "pforge/elliptic.hpp"
#include "pforge/errors.hpp"

namespace pforge {

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }

// q = X1, Phi = p/q, X2 = sqrt(s (q^2 - 2c)); H = C2, Psi = C1.
ReducedSystem example1_chart(const SystemDef& sys) {
  const double s = sys.params.sign_branch;
  auto w = [s](double q, double c) { return s * (q * q - 2.0 * c); };
  ReducedSystem rs;
  rs.map.name = "mapExI";
  rs.map.forward = [w](double q, double p, double c) { return vec3(q, std::sqrt(w(q, c)), p / q); };
  rs.map.inverse = [s](const StatePoint& x) {
    return ChartPoint{x[0], x[0] * x[2], 0.5 * (x[0] * x[0] - s * x[1] * x[1])};
  };
  rs.map.domain = [w](double q, double, double c) { return q > 0.0 && w(q, c) > 0.0; };
  rs.map.sample_box = {0.2, 1.3, -3.0, 3.0};
  rs.hamiltonian = [w](double q, double p, double c) { return q * q * std::sqrt(w(q, c)) * std::sin(p / q); };
  rs.dh_dp = [w](double q, double p, double c) { return q * std::sqrt(w(q, c)) * std::cos(p / q); };
  rs.dh_dq = [w, s](double q, double p, double c) {
    const double r = std::sqrt(w(q, c)), phi = p / q;
    return 2.0 * q * r * std::sin(phi) + s * q * q * q * std::sin(phi) / r - p * r * std::cos(phi);
  };
  rs.radicand = [w](double q, double e, double c) { return q * q * q * q * w(q, c) - e * e; };
  rs.rate = [](double q, double) { return 1.0 / q; };
  rs.momentum = [w](double q, double e, double c, int branch) {
    const double phi = std::asin(std::clamp(e / (q * q * std::sqrt(w(q, c))), -1.0, 1.0));
    return q * (branch >= 0 ? phi : std::numbers::pi - phi);
  };
  rs.q_floor = 0.05;
  return rs;
}

// X1 = q, X3 = p, X2 = c + int_0^q Q; H = C1, Psi = C2.
ReducedSystem example2_chart_a(const SystemDef& sys) {
  const Polynomial qp(sys.params.poly_q);
  ReducedSystem rs;
  rs.map.name = "mapExII_a";
  rs.map.forward = [qp](double q, double p, double c) { return vec3(q, c + qp.integral(q), p); };
  rs.map.inverse = [qp](const StatePoint& x) { return ChartPoint{x[0], x[2], x[1] - qp.integral(x[0])}; };
  rs.map.domain = [](double, double, double) { return true; };
  rs.map.sample_box = {-2.0, 2.0, -2.0, 2.0};
  rs.hamiltonian = [qp](double q, double p, double c) { return p * p - q * (c + qp.integral(q)); };
  rs.dh_dp = [](double, double p, double) { return 2.0 * p; };
  rs.dh_dq = [qp](double q, double, double c) { return -(c + qp.integral(q)) - q * qp(q); };
  rs.radicand = [qp](double q, double e, double c) { return e + q * (c + qp.integral(q)); };
  rs.rate = [](double, double) { return 2.0; };
  rs.momentum = [rs](double q, double e, double c, int branch) {
    return sgn(branch) * std::sqrt(std::max(0.0, rs.radicand(q, e, c)));
  };
  return rs;
}

// X1 = e^{-q}, X3 = -p, X2 = e^q (p^2 - c); H = C2, Psi = C1.
ReducedSystem example2_chart_b(const SystemDef& sys) {
  const Polynomial qp(sys.params.poly_q);
  ReducedSystem rs;
  rs.map.name = "mapExII_b";
  rs.map.forward = [](double q, double p, double c) { return vec3(std::exp(-q), std::exp(q) * (p * p - c), -p); };
  rs.map.inverse = [](const StatePoint& x) {
    if (!(x[0] > 0.0)) throw DomainError("mapExII_b requires X1 > 0");
    return ChartPoint{-std::log(x[0]), -x[2], x[2] * x[2] - x[0] * x[1]};
  };
  rs.map.domain = [](double, double, double) { return true; };
  rs.map.sample_box = {-1.5, 1.5, -2.0, 2.0};
  rs.hamiltonian = [qp](double q, double p, double c) {
    return std::exp(q) * (p * p - c) - qp.integral(std::exp(-q));
  };
  rs.dh_dp = [](double q, double p, double) { return 2.0 * p * std::exp(q); };
  rs.dh_dq = [qp](double q, double p, double c) {
    return std::exp(q) * (p * p - c) + qp(std::exp(-q)) * std::exp(-q);
  };
  rs.radicand = [qp](double q, double e, double c) { return c + std::exp(-q) * (e + qp.integral(std::exp(-q))); };
  rs.rate = [](double q, double) { return 2.0 * std::exp(q); };
  rs.momentum = [rs](double q, double e, double c, int branch) {
    return sgn(branch) * std::sqrt(std::max(0.0, rs.radicand(q, e, c)));
  };
  return rs;
}

// L = (sqrt(lambda - p^2) cos q, sqrt(lambda - p^2) sin q, p); H = C1, Psi = C2 = lambda.
ReducedSystem euler_chart_a(const SystemDef& sys) {
  const auto [i1, i2, i3] = sys.params.inertia;
  auto a = [i1, i2](double q) {
    const double c = std::cos(q), s = std::sin(q);
    return c * c / (2.0 * i1) + s * s / (2.0 * i2);
  };
  ReducedSystem rs;
  rs.map.name = "mapEuler_a";
  rs.map.forward = [](double q, double p, double lam) {
    const double rho = std::sqrt(lam - p * p);
    return vec3(rho * std::cos(q), rho * std::sin(q), p);
  };
  rs.map.inverse = [](const StatePoint& x) { return ChartPoint{std::atan2(x[1], x[0]), x[2], x.squaredNorm()}; };
  rs.map.domain = [](double, double p, double lam) { return lam - p * p > 0.0; };
  rs.map.sample_box = {-std::numbers::pi, std::numbers::pi, -1.0, 1.0};
  rs.hamiltonian = [a, i3](double q, double p, double lam) { return (lam - p * p) * a(q) + p * p / (2.0 * i3); };
  rs.dh_dp = [a, i3](double q, double p, double) { return p * (1.0 / i3 - 2.0 * a(q)); };
  rs.dh_dq = [i1, i2](double q, double p, double lam) {
    return (lam - p * p) * std::sin(q) * std::cos(q) * (1.0 / i2 - 1.0 / i1);
  };
  rs.radicand = [a, i3](double q, double e, double lam) { return (lam * a(q) - e) / (a(q) - 1.0 / (2.0 * i3)); };
  rs.rate = [a, i3](double q, double) { return std::abs(1.0 / i3 - 2.0 * a(q)); };
  rs.momentum = [rs, a, i3](double q, double e, double lam, int branch) {
    return sgn(branch) * sgn(1.0 / i3 - 2.0 * a(q)) * std::sqrt(std::max(0.0, rs.radicand(q, e, lam)));
  };
  return rs;
}

// L_k = sqrt(I_k / Pi) l_k with l = (rho cos q, -rho sin q, p), rho^2 = lambda - p^2,
// lambda = 2 Pi C1; H = C2 / 2, Psi = C1.
ReducedSystem euler_chart_b(const SystemDef& sys) {
  const auto [i1, i2, i3] = sys.params.inertia;
  const double pi3 = i1 * i2 * i3;
  const double a1 = std::sqrt(i1 / pi3), a2 = std::sqrt(i2 / pi3), a3 = std::sqrt(i3 / pi3);
  auto b = [i1, i2](double q) {
    const double c = std::cos(q), s = std::sin(q);
    return i1 * c * c + i2 * s * s;
  };
  ReducedSystem rs;
  rs.map.name = "mapEuler_b";
  rs.map.forward = [=](double q, double p, double level) {
    const double rho = std::sqrt(2.0 * pi3 * level - p * p);
    return vec3(a1 * rho * std::cos(q), -a2 * rho * std::sin(q), a3 * p);
  };
  rs.map.inverse = [=](const StatePoint& x) {
    const double l1 = x[0] / a1, l2 = x[1] / a2, l3 = x[2] / a3;
    const double level = 0.5 * (x[0] * x[0] / i1 + x[1] * x[1] / i2 + x[2] * x[2] / i3);
    return ChartPoint{std::atan2(-l2, l1), l3, level};
  };
  rs.map.domain = [pi3](double, double p, double level) { return 2.0 * pi3 * level - p * p > 0.0; };
  rs.map.sample_box = {-std::numbers::pi, std::numbers::pi, -1.2, 1.2};
  rs.hamiltonian = [=](double q, double p, double level) {
    return ((2.0 * pi3 * level - p * p) * b(q) + i3 * p * p) / (2.0 * pi3);
  };
  rs.dh_dp = [=](double q, double p, double) { return p * (i3 - b(q)) / pi3; };
  rs.dh_dq = [=](double q, double p, double level) {
    return (2.0 * pi3 * level - p * p) * (i2 - i1) * std::sin(q) * std::cos(q) / pi3;
  };
  rs.radicand = [=](double q, double e, double level) {
    return (2.0 * pi3 * e - 2.0 * pi3 * level * b(q)) / (i3 - b(q));
  };
  rs.rate = [=](double q, double) { return std::abs(i3 - b(q)) / pi3; };
  rs.momentum = [rs, b, i3](double q, double e, double level, int branch) {
    return sgn(branch) * sgn(i3 - b(q)) * std::sqrt(std::max(0.0, rs.radicand(q, e, level)));
  };
  return rs;
}

// Bisection down to a few ulp (well below the 1e-12 contract).
double bisect_root(const std::function<double(double)>& f, double a, double b) {
  auto tol = [](double x, double y) {
    return std::abs(y - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
  };
  boost::uintmax_t max_iter = 200;
  const auto [lo, hi] = boost::math::tools::bisect(f, a, b, tol, max_iter);
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<std::string> chart_structures(std::string_view system) {
  if (system == "example1") return {"pois2"};
  if (system == "example2") return {"pois12", "pois22"};
  if (system == "euler") return {"euler1", "euler2"};
  return {};
}

ReducedSystem reduced_hamiltonian(const SystemDef& sys, std::string_view structure) {
  ReducedSystem rs;
  if (sys.name == "example1" && structure == "pois2")
    rs = example1_chart(sys);
  else if (sys.name == "example2" && structure == "pois12")
    rs = example2_chart_a(sys);
  else if (sys.name == "example2" && structure == "pois22")
    rs = example2_chart_b(sys);
  else if (sys.name == "euler" && structure == "euler1")
    rs = euler_chart_a(sys);
  else if (sys.name == "euler" && structure == "euler2")
    rs = euler_chart_b(sys);
  else
    throw ConfigError("no Poisson map registered for (" + sys.name + ", " + std::string(structure) + ")");
  rs.system = sys.name;
  rs.structure = std::string(structure);
  rs.reg = make_structure(sys, structure);
  rs.flow = sys.flow;
  rs.invariants = sys.invariants;
  return rs;
}

BracketCheck pullback_bracket_residual(const ReducedSystem& rs, double level, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  const auto& box = rs.map.sample_box;
  std::uniform_real_distribution<double> uq(box[0], box[1]), up(box[2], box[3]);
  const ScalarField qf("q", [&](const Vec& x) { return rs.map.inverse(x).q; });
  const ScalarField pf("p", [&](const Vec& x) { return rs.map.inverse(x).p; });
  BracketCheck out;
  for (int i = 0; i < samples; ++i) {
    const double q = uq(rng), p = up(rng);
    if (!rs.map.domain(q, p, level)) {
      ++out.skipped;
      continue;
    }
    const StatePoint x = rs.map.forward(q, p, level);
    out.residual = std::max(out.residual, std::abs(bracket(rs.reg.structure, qf, pf, x) - 1.0));
    ++out.evaluated;
  }
  return out;
}

ChartState chart_state(const ReducedSystem& rs, const StatePoint& x) {
  ChartState s;
  s.point = rs.map.inverse(x);
  s.energy = rs.hamiltonian(s.point.q, s.point.p, s.point.level);
  s.branch = rs.dh_dp(s.point.q, s.point.p, s.point.level) < 0.0 ? -1 : 1;
  return s;
}

std::vector<double> turning_points(const ReducedSystem& rs, double energy, double level,
                                   std::pair<double, double> q_window) {
  const auto [a, b] = q_window;
  if (!(b > a)) throw ContractError("turning_points: empty window");
  auto r = [&](double q) { return rs.radicand(q, energy, level); };
  constexpr int kScan = 4000;
  std::vector<double> roots;
  double q_prev = a, r_prev = r(a);
  if (r_prev == 0.0) roots.push_back(a);
  for (int i = 1; i <= kScan; ++i) {
    const double q = a + (b - a) * i / kScan;
    const double rq = r(q);
    if (std::isfinite(rq) && std::isfinite(r_prev)) {
      if (rq == 0.0)
        roots.push_back(q);
      else if (r_prev != 0.0 && (rq < 0.0) != (r_prev < 0.0))
        roots.push_back(bisect_root(r, q_prev, q));
    }
    q_prev = q;
    r_prev = rq;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double time_of_flight(const ReducedSystem& rs, double q0, double q1, double energy, double level) {
  if (q0 == q1) return 0.0;
  const double a = std::min(q0, q1), b = std::max(q0, q1);
  auto r = [&](double q) { return rs.radicand(q, energy, level); };
  const double scale = std::max({1.0, std::abs(r(a)), std::abs(r(b)), std::abs(r(0.5 * (a + b)))});
  for (double q : {a, b})
    if (r(q) < -1e-9 * scale) throw DomainError("time_of_flight: endpoint is off shell");
  constexpr int kProbe = 256;
  for (int i = 1; i < kProbe; ++i) {
    const double q = a + (b - a) * i / kProbe;
    if (!(r(q) > 0.0)) throw DomainError("time_of_flight: interior turning point; split the interval into branches");
  }
  // q = end +- s^2 removes inverse-square-root endpoint singularities. At a
  // turning point the integrand is written through g(u) = (R(end +- u) - R(end)) / u,
  // which stays smooth; below u0 the difference quotient is extrapolated
  // quadratically since R(end +- u) - R(end) cancels to rounding noise there.
  const double mid = 0.5 * (a + b);
  auto half = [&](double end, double dir) {
    const double shift = r(end);
    const bool turning = std::abs(shift) <= 1e-10 * scale;
    const double u0 = 1e-4 * (mid - a);
    auto g = [&](double u) { return (r(end + dir * u) - shift) / u; };
    const double g1 = g(u0), g2 = g(2.0 * u0), g3 = g(3.0 * u0);
    auto integrand = [&](double s) {
      const double u = s * s;
      const double q = end + dir * u;
      if (!turning) return 2.0 * s / (rs.rate(q, level) * std::sqrt(r(q)));
      double gu;
      if (u >= u0) {
        gu = g(u);
      } else {
        const double x = u / u0;  // Lagrange through x = 1, 2, 3
        gu = g1 * (x - 2.0) * (x - 3.0) / 2.0 - g2 * (x - 1.0) * (x - 3.0) + g3 * (x - 1.0) * (x - 2.0) / 2.0;
      }
      return 2.0 / (rs.rate(q, level) * std::sqrt(std::abs(gu)));
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    return GK::integrate(integrand, 0.0, std::sqrt(mid - a), 20, 1e-13);
  };
  const double left = half(a, 1.0);
  const double right = half(b, -1.0);
  const double total = left + right;
  if (!std::isfinite(total)) throw NumericalError("time_of_flight: divergent integral");
  return total;
}

std::vector<double> sign_change_times(const Trajectory& tr, const std::function<double(const Vec&)>& g) {
  if (tr.segments.empty()) throw ContractError("sign_change_times requires dense output");
  std::vector<double> out;
  for (const auto& seg : tr.segments) {
    const double ta = seg.t0, tb = seg.t0 + seg.h;
    const double ga = g(seg(ta)), gb = g(seg(tb));
    if (gb == 0.0) {
      out.push_back(tb);
      continue;
    }
    if (ga == 0.0 || (ga < 0.0) == (gb < 0.0)) continue;
    double lo = ta, hi = tb, glo = ga;
    for (int i = 0; i < 200 && std::abs(hi - lo) > 1e-14 * std::max(1.0, std::abs(hi)); ++i) {
      const double m = 0.5 * (lo + hi);
      const double gm = g(seg(m));
      if ((gm < 0.0) == (glo < 0.0)) {
        lo = m;
        glo = gm;
      } else {
        hi = m;
      }
    }
    out.push_back(0.5 * (lo + hi));
  }
  if (tr.segments.front().h < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

HJSolution hj_trajectory(const ReducedSystem& rs, double energy, double level, double q_init, int branch,
                         const std::vector<double>& t_grid, const IntegratorConfig& cfg) {
  if (q_init < rs.q_floor) {
    std::ostringstream msg;
    msg << rs.map.name << " excludes q < " << rs.q_floor
        << " (chart singular there); integrate the full system instead (simulate)";
    throw DomainError(msg.str());
  }
  const double r0 = rs.radicand(q_init, energy, level);
  if (!(r0 >= -1e-12 * std::max(1.0, std::abs(energy)))) {
    std::ostringstream msg;
    msg << "off-shell initial condition: (E = " << energy << ", level = " << level << ", q_init = " << q_init
        << ") gives negative radicand " << r0;
    throw DomainError(msg.str());
  }
  HJSolution sol;
  sol.energy = energy;
  sol.level = level;
  sol.branch = branch >= 0 ? 1 : -1;
  sol.q_init = q_init;
  sol.p_init = rs.momentum(q_init, energy, level, sol.branch);
  if (!rs.map.domain(q_init, sol.p_init, level))
    throw DomainError("initial chart point lies outside " + rs.map.name);

  const VectorField reduced("reduced " + rs.map.name, 2, [&rs, level](const Vec& z) {
    if (!rs.map.domain(z[0], z[1], level)) throw DomainError("left the chart of " + rs.map.name);
    Vec v(2);
    v << rs.dh_dp(z[0], z[1], level), -rs.dh_dq(z[0], z[1], level);
    return v;
  });
  IntegratorConfig dense = cfg;
  dense.dense_output = true;
  Vec z0(2);
  z0 << q_init, sol.p_init;
  sol.reduced = integrate_on_grid(reduced, z0, t_grid, {}, dense);
  sol.truncated = sol.reduced.truncated;
  sol.diagnostic = sol.reduced.diagnostic;

  Trajectory& lifted = sol.lifted;
  lifted.invariant_values.resize(rs.invariants.size());
  lifted.drifts.resize(rs.invariants.size());
  for (const auto& c : rs.invariants) lifted.invariant_names.push_back(c.name());
  const ScalarField& psi = *rs.reg.psi;
  for (std::size_t i = 0; i < sol.reduced.times.size(); ++i) {
    const double q = sol.reduced.states[i][0], p = sol.reduced.states[i][1];
    sol.max_energy_error = std::max(sol.max_energy_error, std::abs(rs.hamiltonian(q, p, level) - energy));
    const StatePoint x = rs.map.forward(q, p, level);
    sol.max_level_error = std::max(sol.max_level_error, std::abs(psi(x) - level));
    lifted.times.push_back(sol.reduced.times[i]);
    lifted.states.push_back(x);
    for (std::size_t k = 0; k < rs.invariants.size(); ++k) {
      const double v = rs.invariants[k](x);
      lifted.invariant_values[k].push_back(v);
      lifted.drifts[k].push_back(std::abs(v - lifted.invariant_values[k].front()));
    }
  }
  lifted.truncated = sol.truncated;
  lifted.diagnostic = sol.diagnostic;

  if (!sol.reduced.segments.empty()) {
    sol.extrema = sign_change_times(sol.reduced, [&rs, level](const Vec& z) { return rs.dh_dp(z[0], z[1], level); });
  }
  if (sol.extrema.size() >= 2) {
    sol.half_period_measured = sol.extrema[1] - sol.extrema[0];
    double qa = sol.reduced.at(sol.extrema[0])[0], qb = sol.reduced.at(sol.extrema[1])[0];
    // Snap the measured extrema onto the turning points of the radicand.
    const double lo = std::min(qa, qb), hi = std::max(qa, qb), pad = 1e-3 * std::max(1.0, hi - lo);
    const auto roots = turning_points(rs, energy, level, {lo - pad, hi + pad});
    auto snap = [&roots](double q) {
      double best = q, dist = 1e-5;
      for (double r : roots)
        if (std::abs(r - q) < dist) {
          best = r;
          dist = std::abs(r - q);
        }
      return best;
    };
    qa = snap(qa);
    qb = snap(qb);
    sol.half_period_quadrature = time_of_flight(rs, qa, qb, energy, level);
  }
  return sol;
}

// ---------------------------------------------------------------------------

namespace {

struct EulerFrame {
  std::array<int, 3> perm{0, 1, 2};
  std::array<double, 3> inertia{};
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double rate = 0.0;
  double m = 0.0;
};

EulerFrame euler_frame(const std::array<double, 3>& inertia, double e, double lambda) {
  if (!(inertia[0] > 0.0 && inertia[0] < inertia[1] && inertia[1] < inertia[2]))
    throw DomainError("Euler closed form requires 0 < I1 < I2 < I3");
  const double tol = 1e-12 * std::max(1.0, std::abs(lambda));
  if (lambda < 2.0 * e * inertia[0] - tol || lambda > 2.0 * e * inertia[2] + tol)
    throw DomainError("Euler closed form requires 2 E I1 <= lambda <= 2 E I3");
  if (std::abs(lambda - 2.0 * e * inertia[1]) <= tol) throw DomainError("separatrix lambda = 2 E I2 (m = 1)");
  EulerFrame f;
  if (lambda < 2.0 * e * inertia[1]) {
    f.perm = {2, 1, 0};
  }
  for (int i = 0; i < 3; ++i) f.inertia[i] = inertia[f.perm[i]];
  const auto [j1, j2, j3] = f.inertia;
  f.a1 = std::sqrt(std::max(0.0, j1 * (2.0 * e * j3 - lambda) / (j3 - j1)));
  f.a2 = std::sqrt(std::max(0.0, j2 * (2.0 * e * j3 - lambda) / (j3 - j2)));
  f.a3 = std::sqrt(std::max(0.0, j3 * (lambda - 2.0 * e * j1) / (j3 - j1)));
  f.rate = std::sqrt(std::max(0.0, (j3 - j2) * (lambda - 2.0 * e * j1) / (j1 * j2 * j3)));
  f.m = std::max(0.0, (j2 - j1) * (2.0 * e * j3 - lambda) / ((j3 - j2) * (lambda - 2.0 * e * j1)));
  if (!(f.m < 1.0)) throw DomainError("Euler closed form: modulus m >= 1");
  return f;
}

StatePoint euler_state(const EulerFrame& f, double tau, int sigma) {
  const auto r = elliptic::jacobi_sn_cn_dn(tau, elliptic::Modulus(f.m));
  const std::array<double, 3> lp{f.a1 * r.cn, -sigma * f.a2 * r.sn, sigma * f.a3 * r.dn};
  StatePoint l(3);
  for (int i = 0; i < 3; ++i) l[f.perm[i]] = lp[i];
  return l;
}

double euler_energy(const std::array<double, 3>& in, const StatePoint& l) {
  return 0.5 * (l[0] * l[0] / in[0] + l[1] * l[1] / in[1] + l[2] * l[2] / in[2]);
}

}  // namespace

double EulerPhase::period() const {
  if (rate == 0.0) return INFINITY;
  return 4.0 * elliptic::complete_K(elliptic::Modulus(modulus)) / rate;
}

EulerPhase euler_phase(const std::array<double, 3>& inertia, const StatePoint& l0) {
  EulerPhase ph;
  ph.energy = euler_energy(inertia, l0);
  ph.lambda = l0.squaredNorm();
  const EulerFrame f = euler_frame(inertia, ph.energy, ph.lambda);
  ph.swapped = f.perm[0] == 2;
  ph.modulus = f.m;
  ph.rate = f.rate;
  const double l1 = l0[f.perm[0]], l2 = l0[f.perm[1]], l3 = l0[f.perm[2]];
  ph.sigma = l3 < 0.0 ? -1 : 1;
  if (f.a2 == 0.0 || f.rate == 0.0) return ph;
  const double cn = f.a1 > 0.0 ? l1 / f.a1 : 1.0;
  const double sn = -l2 / (ph.sigma * f.a2);
  const double u = elliptic::inverse_amplitude(std::atan2(sn, cn), elliptic::Modulus(f.m));
  ph.t0 = -u / f.rate;
  return ph;
}

Trajectory euler_closed_form(const std::array<double, 3>& inertia, double energy, double lambda, double t0,
                             const std::vector<double>& t_grid, int sigma) {
  const EulerFrame f = euler_frame(inertia, energy, lambda);
  Trajectory tr;
  tr.invariant_names = {"C1", "C2"};
  tr.invariant_values.resize(2);
  tr.drifts.resize(2);
  for (double t : t_grid) {
    const StatePoint l = euler_state(f, f.rate * (t - t0), sigma >= 0 ? 1 : -1);
    tr.times.push_back(t);
    tr.states.push_back(l);
    const double c1 = euler_energy(inertia, l), c2 = l.squaredNorm();
    tr.invariant_values[0].push_back(c1);
    tr.invariant_values[1].push_back(c2);
    tr.drifts[0].push_back(std::abs(c1 - tr.invariant_values[0].front()));
    tr.drifts[1].push_back(std::abs(c2 - tr.invariant_values[1].front()));
  }
  return tr;
}

Trajectory ex2_closed_form(double level, double energy, double b, double t0, const std::vector<double>& t_grid) {
  const double k2 = energy - 0.25 * level * level;
  if (!(k2 >= 0.0)) throw DomainError("closed form requires E - c^2/4 >= 0");
  if (!(b > 0.0)) throw DomainError("closed form requires B > 0");
  Trajectory tr;
  tr.invariant_names = {"C1", "C2"};
  tr.invariant_values.resize(2);
  tr.drifts.resize(2);
  for (double t : t_grid) {
    const double w = b * std::exp(2.0 * (t - t0));
    const double x1 = 0.5 * w - 0.5 * level - 0.5 * k2 / w;
    const StatePoint x = vec3(x1, x1 + level, 0.5 * w + 0.5 * k2 / w);
    tr.times.push_back(t);
    tr.states.push_back(x);
    const double c1 = x[2] * x[2] - x[0] * x[1], c2 = x[1] - x[0];
    tr.invariant_values[0].push_back(c1);
    tr.invariant_values[1].push_back(c2);
    tr.drifts[0].push_back(std::abs(c1 - tr.invariant_values[0].front()));
    tr.drifts[1].push_back(std::abs(c2 - tr.invariant_values[1].front()));
  }
  return tr;
}

StatePoint ex2_published_solution(double level, double energy, double t0, double t) {
  const double a = std::sqrt(energy) + 0.5 * level;
  const double w = a * std::exp(2.0 * (t - t0));
  const double lo = w - 0.5 * level, hi = w + 0.5 * level;
  return vec3((lo * lo - energy) / w, (hi * hi - energy) / w, lo * hi / (2.0 * w));
}

double ex2_flight_time(double q0, double q1, double energy, double level) {
  auto k = [&](double q) {
    const double r = q * q + level * q + energy;
    if (r < 0.0) throw DomainError("ex2_flight_time: off shell");
    return 0.5 * std::log(2.0 * std::sqrt(r) + 2.0 * q + level);
  };
  return std::abs(k(q1) - k(q0));
}

}  // namespace pforge
