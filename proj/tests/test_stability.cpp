#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "pforge/errors.hpp"
#include "pforge/stability.hpp"

using namespace pforge;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// Closed-form linearization of Example I (structure I) at P_c(lambda).
Mat example1_linearization(double lambda) {
  const double l2 = lambda * lambda;
  Mat m(3, 3);
  m << 0, 0, -1.0 / (2.0 * std::sqrt(2.0) * l2), 0, 0, 1.0 / (2.0 * l2), 2.0 * std::sqrt(2.0), -4.0, 0;
  return m;
}

SystemDef bridges(std::vector<double> q) {
  ParameterSet p;
  p.poly_q = std::move(q);
  return make_system("example2", p);
}

double lagrange_norm(const RegisteredStructure& r, const CriticalPoint& cp) {
  return (r.hamiltonian.gradient(cp.state) - cp.multiplier * r.psi->gradient(cp.state)).norm();
}

}  // namespace

TEST_CASE("solve_critical on Example I") {
  const auto sys = make_system("example1");
  const auto r1 = make_structure(sys, "pois1");
  const auto cp = solve_critical(r1.hamiltonian, *r1.psi, 1.0, vec3(0.8, 0.4, 1.5));
  CHECK((cp.state - vec3(1.0 / std::sqrt(2.0), 0.5, std::numbers::pi / 2)).norm() < 1e-10);
  CHECK(lagrange_norm(r1, cp) < 1e-9);
  CHECK(sys.flow(cp.state).norm() < 1e-8);

  const auto r2 = make_structure(sys, "pois2");
  const auto cp2 = solve_critical(r2.hamiltonian, *r2.psi, 2.0, vec3(1.3, 0.9, 1.5));
  CHECK((cp2.state - vec3(std::sqrt(2.0), 1.0, std::numbers::pi / 2)).norm() < 1e-10);
  CHECK(sys.flow(cp2.state).norm() < 1e-8);
}

TEST_CASE("solve_critical on the Bridges example") {
  const auto sys = bridges({1.0});
  const auto r = make_structure(sys, "pois12");
  // grad H + lambda grad Psi = 0 with lambda = 2, i.e. internal multiplier -2.
  const auto cp = solve_critical(r.hamiltonian, *r.psi, -2.0, vec3(1.8, -1.8, 0.1));
  CHECK((cp.state - vec3(2.0, -2.0, 0.0)).norm() < 1e-10);
  CHECK(sys.flow(cp.state).norm() < 1e-8);
}

TEST_CASE("solve_critical failures") {
  const auto sys = make_system("euler");
  const auto r = make_structure(sys, "euler1");
  // Along a principal axis the Newton matrix is singular.
  CHECK_THROWS_AS(solve_critical(r.hamiltonian, *r.psi, 0.25, vec3(0.1, 1.0, 0.1)), NumericalError);

  // No critical points exist on the s = +1 branch of Example I.
  ParameterSet p;
  p.sign_branch = 1;
  const auto up = make_system("example1", p);
  const auto ru = make_structure(up, "pois1");
  CHECK_THROWS_AS(solve_critical(ru.hamiltonian, *ru.psi, 1.0, vec3(0.8, 0.4, 1.5)), NumericalError);
}

TEST_CASE("linearize_flow") {
  const auto sys = make_system("example1");
  const auto r1 = make_structure(sys, "pois1");
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto cp = solve_critical(r1.hamiltonian, *r1.psi, lambda,
                                   vec3(1.0 / (std::sqrt(2.0) * lambda) * 1.1, 0.45 / lambda, 1.5));
    CHECK((linearize_flow(sys.flow, cp.state) - example1_linearization(lambda)).cwiseAbs().maxCoeff() < 1e-8);
  }

  const auto b = bridges({1.0});
  Mat expected(3, 3);
  expected << 0, 0, 2, 0, 0, 2, 1, 1, 0;
  CHECK((linearize_flow(b.flow, vec3(1.0, -1.0, 0.0)) - expected).cwiseAbs().maxCoeff() < 1e-12);

  Mat a(3, 3);
  a << 1, 2, 3, -4, 5, 6, 7, 8, -9;
  CHECK((linearize_flow(linear_field(a), Vec::Zero(3)) - a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linearize_poisson equals the flow Jacobian") {
  const auto sys = make_system("example1");
  const auto p1 = make_structure_pair(sys, "pois1");
  const auto p2 = make_structure_pair(sys, "pois2");
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto c1 = critical_point_at(p1, lambda);
    const auto c2 = critical_point_at(p2, 1.0 / lambda);
    CHECK((c1.state - c2.state).norm() < 1e-9);
    const Mat flow = linearize_flow(sys.flow, c1.state);
    const Mat l1 = linearize_poisson(p1.reg.structure, p1.reg.hamiltonian, *p1.reg.psi, c1);
    const Mat l2 = linearize_poisson(p2.reg.structure, p2.reg.hamiltonian, *p2.reg.psi, c2);
    CHECK((l1 - flow).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((l2 - flow).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((l1 - example1_linearization(lambda)).cwiseAbs().maxCoeff() < 1e-8);
  }

  const auto e = make_system("euler");
  for (double a : {0.5, 1.0, -2.0}) {
    const auto c1 = euler_relative_equilibrium(e, "euler1", a);
    const auto c2 = euler_relative_equilibrium(e, "euler2", a);
    const auto r1 = make_structure(e, "euler1");
    const auto r2 = make_structure(e, "euler2");
    CHECK(e.flow(c1.state).norm() < 1e-14);
    CHECK(lagrange_norm(r1, c1) < 1e-14);
    CHECK(lagrange_norm(r2, c2) < 1e-14);
    const Mat flow = linearize_flow(e.flow, c1.state);
    CHECK((linearize_poisson(r1.structure, r1.hamiltonian, *r1.psi, c1) - flow).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((linearize_poisson(r2.structure, r2.hamiltonian, *r2.psi, c2) - flow).cwiseAbs().maxCoeff() < 1e-7);
    // Rotation about the middle axis is unstable.
    CHECK(classify(mu_squared(eigenvalues_3x3(flow))) == Classification::hyperbolic);
  }
}

TEST_CASE("eigenvalues_3x3") {
  auto ev = eigenvalues_3x3(example1_linearization(1.0));
  CHECK(std::abs(ev[0]) < 1e-8);
  CHECK(std::abs(ev[1] - std::complex<double>(0.0, -std::sqrt(3.0))) < 1e-8);
  CHECK(std::abs(ev[2] - std::complex<double>(0.0, std::sqrt(3.0))) < 1e-8);
  CHECK(std::abs(mu_squared(ev) + 3.0) < 1e-8);

  Mat b(3, 3);
  b << 0, 0, 2, 0, 0, 2, 1, 1, 0;
  ev = eigenvalues_3x3(b);
  CHECK(std::abs(ev[0] + 2.0) < 1e-12);
  CHECK(std::abs(ev[1]) < 1e-12);
  CHECK(std::abs(ev[2] - 2.0) < 1e-12);
  CHECK(std::abs(mu_squared(ev) - 4.0) < 1e-12);

  ev = eigenvalues_3x3(Mat::Identity(3, 3));
  for (const auto& z : ev) CHECK(std::abs(z - 1.0) < 1e-12);

  // Against a general eigensolver.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 500; ++k) {
    Mat a(3, 3);
    for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = u(rng);
    const auto mine = eigenvalues_3x3(a);
    const Eigen::Vector3cd ref = Eigen::EigenSolver<Mat>(a).eigenvalues();
    for (const auto& z : mine) {
      double best = INFINITY;
      for (int i = 0; i < 3; ++i) best = std::min(best, std::abs(z - ref[i]));
      CHECK(best < 1e-9);
    }
  }
  CHECK_THROWS_AS(eigenvalues_3x3(Mat::Zero(2, 2)), ContractError);
}

TEST_CASE("classification thresholds") {
  CHECK(classify(-3.0) == Classification::elliptic);
  CHECK(classify(4.0) == Classification::hyperbolic);
  CHECK(classify(1e-11) == Classification::degenerate);
  CHECK(to_string(Classification::hyperbolic) == "hyperbolic");
}

TEST_CASE("casimir_slope") {
  const auto sys = make_system("example1");
  const auto r1 = make_structure(sys, "pois1");
  const auto cp = solve_critical(r1.hamiltonian, *r1.psi, 1.0, vec3(0.8, 0.4, 1.5));
  const auto s = casimir_slope(r1.hamiltonian, *r1.psi, cp, default_slope_step(1.0));
  CHECK(std::abs(s.dpsi_dm + 0.75) < 1e-6);
  CHECK(std::abs(s.dh_dm + 0.75) < 1e-6);

  const auto r2 = make_structure(sys, "pois2");
  const auto cp2 = solve_critical(r2.hamiltonian, *r2.psi, 1.0, vec3(0.8, 0.4, 1.5));
  CHECK(std::abs(casimir_slope(r2.hamiltonian, *r2.psi, cp2, 1e-4).dpsi_dm - 0.75) < 1e-6);
  CHECK_THROWS_AS(casimir_slope(r2.hamiltonian, *r2.psi, cp2, 0.0), ContractError);
}

TEST_CASE("Bridges example slope and spectrum against the closed forms") {
  // Psi(P_c(lambda)) = -lambda Q(lambda) - int_0^lambda Q, so dPsi/dlambda = -(2Q + lambda Q');
  // mu^2 = 2(2Q + lambda Q').
  for (const auto& coeffs : {std::vector<double>{1.0}, std::vector<double>{1.0, 0.5}, std::vector<double>{2.0, -0.3, 0.1}}) {
    const auto sys = bridges(coeffs);
    const Polynomial q(coeffs);
    const auto pair = make_structure_pair(sys, "pois12");
    for (double lambda : {0.5, 1.0, 2.0}) {
      const auto rep = stability_at(sys, pair, lambda);
      CHECK((rep.critical_point.state - vec3(lambda, -lambda * q(lambda), 0.0)).norm() < 1e-10);
      const double k = 2.0 * q(lambda) + lambda * q.derivative(lambda);
      CHECK(std::abs(rep.casimir_slope + k) < 1e-6 * std::max(1.0, k));
      CHECK(std::abs(rep.mu_squared - 2.0 * k) < 1e-8 * std::max(1.0, k));
    }
  }
  const auto rep = stability_at(bridges({1.0}), make_structure_pair(bridges({1.0}), "pois12"), 1.0);
  CHECK(rep.classification == Classification::hyperbolic);
  CHECK(std::abs(rep.mu_squared - 4.0) < 1e-8);
  CHECK(std::abs(rep.casimir_slope + 2.0) < 1e-6);
}

TEST_CASE("mu^2 matches the slope relations of Example I") {
  const auto sys = make_system("example1");
  const auto p1 = make_structure_pair(sys, "pois1");
  const auto p2 = make_structure_pair(sys, "pois2");
  for (double m : {0.5, 0.75, 1.0, 1.5, 2.0}) {
    const auto a = stability_at(sys, p1, m);
    CHECK(std::abs(a.mu_squared - 4.0 * m * m * a.casimir_slope) < 1e-6 * std::abs(a.mu_squared));
    CHECK(std::abs(a.mu_squared + 3.0 / (m * m)) < 1e-8 * std::abs(a.mu_squared));
    CHECK(std::abs(a.hamiltonian_slope + 0.75 / (m * m * m)) < 1e-6 * std::abs(a.hamiltonian_slope));
    const auto b = stability_at(sys, p2, m);
    CHECK(std::abs(b.mu_squared + 4.0 * m * b.casimir_slope) < 1e-6 * std::abs(b.mu_squared));
    // One zero eigenvalue for every Casimir-form linearization.
    CHECK(std::abs(a.eigenvalues[0]) < 1e-8);
    CHECK(std::abs(b.eigenvalues[0]) < 1e-8);
    CHECK(sys.flow(a.critical_point.state).norm() < 1e-8);
    CHECK(sys.flow(b.critical_point.state).norm() < 1e-8);
  }
}

TEST_CASE("bridges_report verdicts") {
  const auto sys = make_system("example1");
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const auto a = bridges_report(sys, make_structure_pair(sys, "pois1"), grid);
  CHECK(a.relation == "elliptic<=>slope<0");
  CHECK(a.matches_reference);
  for (const auto& r : a.reports) {
    CHECK(r.classification == Classification::elliptic);
    CHECK(r.casimir_slope < 0.0);
  }
  const auto b = bridges_report(sys, make_structure_pair(sys, "pois2"), grid, a.relation);
  CHECK(b.relation == "elliptic<=>slope>0");
  CHECK_FALSE(b.matches_reference);
  for (const auto& r : b.reports) {
    CHECK(r.classification == Classification::elliptic);
    CHECK(r.casimir_slope > 0.0);
  }
  REQUIRE(a.reports.size() == 3);
  CHECK(a.reports[1].multiplier == 1.0);
  CHECK(std::abs(a.reports[1].mu_squared + 3.0) < 1e-8);
  CHECK(std::abs(a.reports[1].casimir_slope + 0.75) < 1e-6);

  const auto ex2 = bridges({1.0});
  const auto c = bridges_report(ex2, make_structure_pair(ex2, "pois12"), {0.5, 1.0, 2.0});
  CHECK(c.relation == "elliptic<=>slope>0");
  const auto d = bridges_report(ex2, make_structure_pair(ex2, "pois22"), {-0.5, -1.0, -2.0}, c.relation);
  CHECK(d.relation == "elliptic<=>slope<0");
  CHECK_FALSE(d.matches_reference);
}

TEST_CASE("structure pair registry") {
  CHECK_THROWS_AS(make_structure_pair(make_system("euler"), "euler1"), ConfigError);
  CHECK_THROWS_AS(make_structure_pair(make_system("example1"), "nope"), ConfigError);
  CHECK_THROWS_AS(euler_relative_equilibrium(make_system("example1"), "euler1", 1.0), ConfigError);
}
