#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "pforge/elliptic.hpp"
#include "pforge/errors.hpp"
#include "pforge/hj.hpp"

using namespace pforge;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

struct Case {
  std::string system;
  std::string structure;
  double level;
};

const Case kCases[] = {{"example1", "pois2", 1.0},
                       {"example2", "pois12", 0.5},
                       {"example2", "pois22", 0.7},
                       {"euler", "euler1", 1.5},
                       {"euler", "euler2", 0.2}};

// Real roots of a monic cubic via its companion matrix.
std::vector<double> cubic_real_roots(double a, double b, double c) {
  Mat comp = Mat::Zero(3, 3);
  comp(0, 2) = -c;
  comp(1, 2) = -b;
  comp(2, 2) = -a;
  comp(1, 0) = 1.0;
  comp(2, 1) = 1.0;
  const Eigen::Vector3cd ev = Eigen::EigenSolver<Mat>(comp).eigenvalues();
  std::vector<double> out;
  for (int i = 0; i < 3; ++i)
    if (std::abs(ev[i].imag()) < 1e-12) out.push_back(ev[i].real());
  std::sort(out.begin(), out.end());
  return out;
}

double max_state_error(const Trajectory& a, const Trajectory& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(a.states.size(), b.states.size()); ++i)
    worst = std::max(worst, (a.states[i] - b.states[i]).lpNorm<Eigen::Infinity>());
  return worst;
}

IntegratorConfig tight() {
  IntegratorConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-14;
  return cfg;
}

}  // namespace

TEST_CASE("Poisson maps are canonical and confined to their level") {
  for (const auto& c : kCases) {
    INFO(c.system << " " << c.structure);
    const auto sys = make_system(c.system);
    const auto rs = reduced_hamiltonian(sys, c.structure);
    const auto check = pullback_bracket_residual(rs, c.level, 200);
    CHECK(check.evaluated > 50);
    CHECK(check.residual < 1e-9);

    std::mt19937_64 rng(9);
    const auto& box = rs.map.sample_box;
    std::uniform_real_distribution<double> uq(box[0], box[1]), up(box[2], box[3]);
    for (int i = 0; i < 200; ++i) {
      const double q = uq(rng), p = up(rng);
      if (!rs.map.domain(q, p, c.level)) continue;
      const StatePoint x = rs.map.forward(q, p, c.level);
      const ChartPoint back = rs.map.inverse(x);
      CHECK(std::abs(back.q - q) < 1e-10);
      CHECK(std::abs(back.p - p) < 1e-10);
      CHECK(std::abs(back.level - c.level) < 1e-10);
      CHECK(std::abs((*rs.reg.psi)(x) - c.level) < 1e-10);
      // Reduced Hamiltonian is the pullback of the full one.
      CHECK(std::abs(rs.reg.hamiltonian(x) - rs.hamiltonian(q, p, c.level)) < 1e-10);
      // Canonical equations agree with finite differences of H.
      const Vec grad = fd::gradient([&](const Vec& z) { return rs.hamiltonian(z[0], z[1], c.level); },
                                    (Vec(2) << q, p).finished());
      const double dq = grad[0], dp = grad[1];
      CHECK(std::abs(dq - rs.dh_dq(q, p, c.level)) < 1e-8 * std::max(1.0, std::abs(dq)));
      CHECK(std::abs(dp - rs.dh_dp(q, p, c.level)) < 1e-8 * std::max(1.0, std::abs(dp)));
      // The lifted canonical vector field is the full flow.
      const Vec lifted = fd::jacobian([&](const Vec& z) { return rs.map.forward(z[0], z[1], c.level); },
                                      (Vec(2) << q, p).finished()) *
                         (Vec(2) << rs.dh_dp(q, p, c.level), -rs.dh_dq(q, p, c.level)).finished();
      CHECK((lifted - sys.flow(x)).lpNorm<Eigen::Infinity>() < 1e-7 * std::max(1.0, sys.flow(x).norm()));
    }
  }
}

TEST_CASE("reduced Hamiltonians in closed form") {
  const auto e1 = reduced_hamiltonian(make_system("example1"), "pois2");
  CHECK(std::abs(e1.hamiltonian(1.1, 0.7, 1.0) - 1.21 * std::sqrt(2.0 - 1.21) * std::sin(0.7 / 1.1)) < 1e-14);

  const auto eu = reduced_hamiltonian(make_system("euler"), "euler1");
  const double lam = 0.94, q = 0.4, p = 0.3;
  const double expected = (lam - p * p) * std::cos(q) * std::cos(q) / 2.0 + (lam - p * p) * std::sin(q) * std::sin(q) / 4.0 +
                          p * p / 6.0;
  CHECK(std::abs(eu.hamiltonian(q, p, lam) - expected) < 1e-14);

  const auto b = reduced_hamiltonian(make_system("example2"), "pois12");
  CHECK(std::abs(b.hamiltonian(0.8, 0.3, 0.5) - (0.09 - 0.8 * (0.5 + 0.8))) < 1e-14);

  CHECK_THROWS_AS(reduced_hamiltonian(make_system("example1"), "pois1"), ConfigError);
  CHECK_THROWS_AS(reduced_hamiltonian(make_system("o2_cartesian"), "ansatz_c1"), ConfigError);
}

TEST_CASE("turning points") {
  const auto e1 = reduced_hamiltonian(make_system("example1"), "pois2");
  const auto tp = turning_points(e1, 0.5, 1.0, {1e-3, std::sqrt(2.0) - 1e-9});
  // q^4 (2 - q^2) = 0.25  <=>  u^3 - 2u^2 + 0.25 = 0 with u = q^2.
  std::vector<double> oracle;
  for (double u : cubic_real_roots(-2.0, 0.0, 0.25))
    if (u > 0.0 && u < 2.0) oracle.push_back(std::sqrt(u));
  REQUIRE(oracle.size() == 2);
  REQUIRE(tp.size() == 2);
  CHECK(std::abs(tp[0] - oracle[0]) < 1e-11);
  CHECK(std::abs(tp[1] - oracle[1]) < 1e-11);

  const auto b = reduced_hamiltonian(make_system("example2"), "pois12");
  CHECK(turning_points(b, 1.0, 1.0, {0.0, 10.0}).empty());  // E > c^2/4: monotone escape

  // Euler top with lambda < 2 E I2: q librates between a symmetric pair.
  const auto sys = make_system("euler");
  const auto ea = reduced_hamiltonian(sys, "euler1");
  const Vec l0 = vec3(0.9, 0.3, 0.2);
  const auto cs = chart_state(ea, l0);
  const auto lib = turning_points(ea, cs.energy, cs.point.level, {-std::numbers::pi / 2, std::numbers::pi / 2});
  REQUIRE(lib.size() == 2);
  const double cos2 = (2.0 * cs.energy / cs.point.level - 0.5) / (1.0 - 0.5);
  CHECK(std::abs(lib[1] - std::acos(std::sqrt(cos2))) < 1e-11);
  CHECK(std::abs(lib[0] + lib[1]) < 1e-11);
  // Demo orbit: q circulates.
  const auto demo = chart_state(ea, vec3(0.2, 0.3, 0.9));
  CHECK(turning_points(ea, demo.energy, demo.point.level, {-std::numbers::pi, std::numbers::pi}).empty());
}

TEST_CASE("time of flight") {
  const auto b = reduced_hamiltonian(make_system("example2"), "pois12");
  CHECK(time_of_flight(b, 0.4, 0.4, 1.0, 0.5) == 0.0);
  for (double e : {0.3, 1.0, 4.0}) {
    const double t = time_of_flight(b, 0.1, 2.5, e, 0.5);
    CHECK(std::abs(t - ex2_flight_time(0.1, 2.5, e, 0.5)) < 1e-9);
  }
  // Starting exactly at a turning point: R = q^2 + c q + E with c = 3, E = 2 vanishes at q = -1.
  CHECK(std::abs(time_of_flight(b, -1.0, 0.5, 2.0, 3.0) - ex2_flight_time(-1.0, 0.5, 2.0, 3.0)) < 1e-9);

  const auto e1 = reduced_hamiltonian(make_system("example1"), "pois2");
  const auto tp = turning_points(e1, 0.5, 1.0, {1e-3, std::sqrt(2.0) - 1e-9});
  CHECK_THROWS_AS(time_of_flight(e1, tp[0] - 0.05, tp[1], 0.5, 1.0), DomainError);
  CHECK_THROWS_AS(time_of_flight(b, -1.5, 0.5, 2.0, 3.0), DomainError);  // crosses the turning point
}

TEST_CASE("Example I scenario: quadrature, reduced and full dynamics agree") {
  const auto sys = make_system("example1");
  const auto rs = reduced_hamiltonian(sys, "pois2");
  const double e = 0.5, c = 1.0;
  const auto tp = turning_points(rs, e, c, {1e-3, std::sqrt(2.0) - 1e-9});
  REQUIRE(tp.size() == 2);
  const double half = time_of_flight(rs, tp[0], tp[1], e, c);
  const double period = 2.0 * half;
  // 30-digit adaptive quadrature of q / sqrt(q^4 (2 - q^2) - 1/4) between the roots.
  CHECK(std::abs(half - 1.3617797847323066) < 1e-9);

  const auto grid = uniform_grid(0.0, 2.0 * period, 400);
  const auto sol = hj_trajectory(rs, e, c, 1.0, 1, grid, tight());
  CHECK(std::abs(sol.p_init - std::numbers::pi / 6) < 1e-14);
  CHECK_FALSE(sol.truncated);
  CHECK(sol.max_energy_error < 1e-9);
  CHECK(sol.max_level_error < 1e-8);
  REQUIRE(sol.half_period_measured);
  CHECK(std::abs(*sol.half_period_measured - half) < 1e-6 * half);
  CHECK(std::abs(*sol.half_period_quadrature - half) < 1e-9 * half);

  // Direct integration from the lifted initial state.
  IntegratorConfig cfg = tight();
  cfg.dense_output = true;
  const auto full = integrate_on_grid(sys.flow, sol.lifted.states.front(), grid, sys.invariants, cfg);
  CHECK(max_state_error(sol.lifted, full) < 1e-6);

  // Half period measured on the full flow: time between consecutive X1 extrema.
  const auto ext = sign_change_times(full, [&](const Vec& x) { return sys.flow(x)[0]; });
  REQUIRE(ext.size() >= 3);
  CHECK(std::abs((ext[1] - ext[0]) - half) < 1e-6 * half);
  CHECK(std::abs((ext[2] - ext[1]) - half) < 1e-6 * half);

  // Closed orbit: the state returns after one period (angle modulo 2 pi).
  const Vec x0 = sol.lifted.states.front();
  const Vec x1 = sol.lifted.states[200];
  CHECK(std::abs(x1[0] - x0[0]) < 1e-6);
  CHECK(std::abs(x1[1] - x0[1]) < 1e-6);
  CHECK(std::abs(wrap_angle(x1[2] - x0[2])) < 1e-6);
}

TEST_CASE("every registered chart reproduces the full flow") {
  struct Run {
    std::string system;
    std::string structure;
    Vec x0;
    double horizon;
  };
  const Run runs[] = {{"example1", "pois2", vec3(0.9, 0.8, 0.4), 6.0},
                      {"example2", "pois12", vec3(0.3, 0.5, -0.2), 1.0},
                      {"example2", "pois22", vec3(0.6, 0.4, 0.3), 1.0},
                      {"euler", "euler1", vec3(0.2, 0.3, 0.9), 20.0},
                      {"euler", "euler2", vec3(0.2, 0.3, 0.9), 20.0}};
  for (const auto& r : runs) {
    INFO(r.system << " " << r.structure);
    const auto sys = make_system(r.system);
    const auto rs = reduced_hamiltonian(sys, r.structure);
    const auto cs = chart_state(rs, r.x0);
    const auto grid = uniform_grid(0.0, r.horizon, 100);
    const auto sol = hj_trajectory(rs, cs.energy, cs.point.level, cs.point.q, cs.branch, grid, tight());
    CHECK((sol.lifted.states.front() - r.x0).norm() < 1e-12);
    const auto full = integrate_on_grid(sys.flow, r.x0, grid, sys.invariants, tight());
    CHECK(max_state_error(sol.lifted, full) < 1e-6);
    CHECK(sol.max_energy_error < 1e-9);
    CHECK(sol.max_level_error < 1e-8);
  }
}

TEST_CASE("Euler top closed form") {
  const std::array<double, 3> inertia{1.0, 2.0, 3.0};
  const auto sys = make_system("euler");
  const Vec l0 = vec3(0.2, 0.3, 0.9);
  const auto ph = euler_phase(inertia, l0);
  CHECK(std::abs(ph.energy - 0.1775) < 1e-15);
  CHECK(std::abs(ph.lambda - 0.94) < 1e-15);
  CHECK(std::abs(ph.modulus - 0.125 / 0.585) < 1e-15);
  CHECK_FALSE(ph.swapped);

  const double period = ph.period();
  const auto grid = uniform_grid(0.0, 3.0 * period, 600);
  const auto closed = euler_closed_form(inertia, ph.energy, ph.lambda, ph.t0, grid, ph.sigma);
  CHECK((closed.states.front() - l0).norm() < 1e-12);
  const auto ode = integrate_on_grid(sys.flow, l0, grid, sys.invariants, tight());
  CHECK(max_state_error(closed, ode) < 1e-6);
  CHECK(closed.max_drift(0) < 1e-14);
  CHECK(closed.max_drift(1) < 1e-14);

  // Elliptic route vs quadrature route for the period (q: 0 -> pi/2 is a quarter).
  for (const char* label : {"euler1", "euler2"}) {
    const auto rs = reduced_hamiltonian(sys, label);
    const auto cs = chart_state(rs, l0);
    const double quarter = time_of_flight(rs, 0.0, std::numbers::pi / 2, cs.energy, cs.point.level);
    CHECK(std::abs(4.0 * quarter - period) < 1e-8 * period);
  }

  // Other branch and orientation: axes 1 and 3 exchange roles; both L3 signs.
  for (const Vec& start : {vec3(0.9, 0.3, 0.2), vec3(-0.9, 0.3, -0.2), vec3(0.2, -0.3, -0.9)}) {
    const auto p2 = euler_phase(inertia, start);
    const auto g = uniform_grid(0.0, 2.0 * p2.period(), 300);
    const auto cf = euler_closed_form(inertia, p2.energy, p2.lambda, p2.t0, g, p2.sigma);
    CHECK(max_state_error(cf, integrate_on_grid(sys.flow, start, g, {}, tight())) < 1e-6);
  }
  CHECK(euler_phase(inertia, vec3(0.9, 0.3, 0.2)).swapped);

  // Phase origin and the steady-rotation limit.
  const auto at0 = euler_closed_form(inertia, 0.1775, 0.94, 0.0, {0.0});
  const double a1 = std::sqrt(1.0 * (2 * 0.1775 * 3 - 0.94) / 2.0), a3 = std::sqrt(3.0 * (0.94 - 2 * 0.1775) / 2.0);
  CHECK((at0.states[0] - vec3(a1, 0.0, a3)).norm() < 1e-15);
  const auto steady = euler_closed_form(inertia, 0.5 / 3.0, 1.0, 0.0, uniform_grid(0.0, 5.0, 10));
  for (const auto& l : steady.states) CHECK((l - vec3(0.0, 0.0, 1.0)).norm() < 1e-7);

  CHECK_THROWS_AS(euler_closed_form(inertia, 0.25, 1.0, 0.0, {0.0}), DomainError);  // separatrix
  CHECK_THROWS_AS(euler_closed_form(inertia, 0.1, 1.0, 0.0, {0.0}), DomainError);   // lambda > 2 E I3
  CHECK_THROWS_AS(euler_closed_form({2.0, 1.0, 3.0}, 0.1775, 0.94, 0.0, {0.0}), DomainError);
}

TEST_CASE("Euler top through both structures") {
  const auto sys = make_system("euler");
  const Vec l0 = vec3(0.2, 0.3, 0.9);
  const auto r1 = reduced_hamiltonian(sys, "euler1");
  const auto r2 = reduced_hamiltonian(sys, "euler2");
  const auto s1 = chart_state(r1, l0);
  const auto s2 = chart_state(r2, l0);
  // lambda = 2 I1 I2 I3 C1 and 2E = C2 identify the constants.
  CHECK(std::abs(2.0 * 6.0 * s2.point.level - 2.13) < 1e-14);
  CHECK(std::abs(2.0 * s2.energy - s1.point.level) < 1e-14);
  const auto grid = uniform_grid(0.0, 30.0, 300);
  const auto a = hj_trajectory(r1, s1.energy, s1.point.level, s1.point.q, s1.branch, grid, tight());
  const auto b = hj_trajectory(r2, s2.energy, s2.point.level, s2.point.q, s2.branch, grid, tight());
  CHECK(max_state_error(a.lifted, b.lifted) < 1e-6);
}

TEST_CASE("Bridges example closed form") {
  const auto sys = make_system("example2");
  const auto g = uniform_grid(-1.0, 1.0, 40);
  const auto sh = ex2_closed_form(0.0, 1.0, 1.0, 0.0, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(sh.states[i][0] - std::sinh(2.0 * g[i])) < 1e-12 * std::cosh(2.0 * g[i]));
    CHECK(std::abs(sh.states[i][2] - std::cosh(2.0 * g[i])) < 1e-12 * std::cosh(2.0 * g[i]));
    CHECK(sh.states[i][1] == sh.states[i][0]);
  }
  const double c = 0.8, e = 1.3;
  const auto tr = ex2_closed_form(c, e, 0.7, 0.2, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec& x = tr.states[i];
    CHECK(std::abs(x[2] * x[2] - x[0] * x[1] - e) < 1e-12);
    CHECK(std::abs(x[1] - x[0] - c) < 1e-12);
    // dX/dt from the closed form: w' = 2w.
    const double w = 0.7 * std::exp(2.0 * (g[i] - 0.2)), k2 = e - c * c / 4.0;
    const Vec dx = vec3(w + k2 / w, w + k2 / w, w - k2 / w);
    CHECK((dx - sys.flow(x)).lpNorm<Eigen::Infinity>() < 1e-9);
  }
  CHECK_THROWS_AS(ex2_closed_form(4.0, 1.0, 1.0, 0.0, g), DomainError);
  CHECK_THROWS_AS(ex2_closed_form(0.0, 1.0, -1.0, 0.0, g), DomainError);

  // The published form violates the flow.
  const double h = 1e-5;
  const Vec xp = ex2_published_solution(c, e, 0.0, 0.3);
  const Vec dxp = (ex2_published_solution(c, e, 0.0, 0.3 + h) - ex2_published_solution(c, e, 0.0, 0.3 - h)) / (2 * h);
  CHECK((dxp - sys.flow(xp)).lpNorm<Eigen::Infinity>() > 1e-2);
}

TEST_CASE("hj_trajectory rejects bad initial data") {
  const auto rs = reduced_hamiltonian(make_system("example1"), "pois2");
  const auto g = uniform_grid(0.0, 1.0, 4);
  CHECK_THROWS_AS(hj_trajectory(rs, 0.5, 1.0, 0.01, 1, g), DomainError);  // chart excludes q ~ 0
  CHECK_THROWS_AS(hj_trajectory(rs, 5.0, 1.0, 1.0, 1, g), DomainError);   // off shell
}
