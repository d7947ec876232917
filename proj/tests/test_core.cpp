#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pforge/core.hpp"
#include "pforge/errors.hpp"
#include "pforge/systems.hpp"

using namespace pforge;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

// Polynomial test fields with exact Jacobians.
VectorField quadratic_field_a() {
  return VectorField(
      "a", 3,
      [](const Vec& x) { return v({x[1] * x[2], x[0] * x[0], x[0] + x[2] * x[2]}); },
      [](const Vec& x) -> Mat {
        Mat j(3, 3);
        j << 0, x[2], x[1], 2 * x[0], 0, 0, 1, 0, 2 * x[2];
        return j;
      });
}

VectorField quadratic_field_b() {
  return VectorField(
      "b", 3, [](const Vec& x) { return v({x[0] * x[1], x[2], x[1] * x[1] - x[0]}); },
      [](const Vec& x) -> Mat {
        Mat j(3, 3);
        j << x[1], x[0], 0, 0, 0, 1, -1, 2 * x[1], 0;
        return j;
      });
}

VectorField cubic_field_c() {
  return VectorField(
      "c", 3, [](const Vec& x) { return v({x[2] * x[2] * x[0], x[0] - x[1], x[1] * x[0] * x[2]}); },
      [](const Vec& x) -> Mat {
        Mat j(3, 3);
        j << x[2] * x[2], 0, 2 * x[2] * x[0], 1, -1, 0, x[1] * x[2], x[0] * x[2], x[1] * x[0];
        return j;
      });
}

}  // namespace

TEST_CASE("fd_gradient on spec examples") {
  const ScalarField quad("q", [](const Vec& x) { return x[0] * x[0] + x[1] * x[1]; });
  const Vec g = fd::gradient([&](const Vec& x) { return quad(x); }, v({1, 2}));
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-12));

  // C2 = X1^2 X2 sin(Phi); closed-form gradient (2 X1 X2 sin, X1^2 sin, X1^2 X2 cos).
  auto c2 = [](const Vec& x) { return x[0] * x[0] * x[1] * std::sin(x[2]); };
  const Vec gc = fd::gradient(c2, v({1, 1, std::numbers::pi / 2}));
  CHECK(std::abs(gc[0] - 2.0) < 1e-10);
  CHECK(std::abs(gc[1] - 1.0) < 1e-10);
  CHECK(std::abs(gc[2]) < 1e-10);

  const Vec gz = fd::gradient([](const Vec&) { return 3.5; }, v({0.3, -2, 7}));
  CHECK(gz.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("fd_gradient reports non-finite stencil values") {
  auto bad = [](const Vec& x) { return 1.0 / x[0]; };
  CHECK_THROWS_AS(fd::gradient(bad, v({0.0, 1.0})), DomainError);
  CHECK_THROWS_AS(fd::hessian([](const Vec& x) { return std::log(x[0]); }, v({-1.0})), DomainError);
}

TEST_CASE("fd_hessian on spec examples") {
  const Mat h = fd::hessian([](const Vec& x) { return x[0] * x[1]; }, v({0.4, -1.3}));
  CHECK(std::abs(h(0, 0)) < 1e-9);
  CHECK(std::abs(h(1, 1)) < 1e-9);
  CHECK(std::abs(h(0, 1) - 1.0) < 1e-9);
  CHECK(h(0, 1) == h(1, 0));

  const SystemDef ex1 = make_system("example1");
  const Mat hc = ex1.invariant("C1").without_closed_forms().hessian(v({0.7, 1.3, 0.4}));
  CHECK((hc - Vec(v({1, 1, 0})).asDiagonal().toDenseMatrix()).lpNorm<Eigen::Infinity>() < 1e-8);

  const Mat hl = fd::hessian([](const Vec& x) { return 3 * x[0] - 2 * x[1] + x[2]; }, v({1, 2, 3}));
  CHECK(hl.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("lie_derivative_scalar") {
  const SystemDef euler = make_system("euler");
  CHECK(std::abs(lie_derivative_scalar(euler.flow, euler.invariant("C2"), v({0.2, 0.3, 0.9}))) < 1e-15);

  const SystemDef ex1 = make_system("example1");
  CHECK(std::abs(lie_derivative_scalar(ex1.flow, ex1.invariant("C1"), v({1, 1, std::numbers::pi / 3}))) < 1e-14);

  const VectorField radial = linear_field(Mat::Identity(2, 2));
  const ScalarField x1sq("x1^2", [](const Vec& x) { return x[0] * x[0]; });
  CHECK(lie_derivative_scalar(radial, x1sq, v({3, 0.5})) == doctest::Approx(18.0).epsilon(1e-10));

  CHECK_THROWS_AS(lie_derivative_scalar(radial, x1sq, v({1, 2, 3})), ContractError);
}

TEST_CASE("lie_bracket convention and identities") {
  const SystemDef o2 = make_system("o2_cartesian");
  const VectorField eta2 = o2.symmetry("eta2").at(0.0);
  const Vec x = v({1, 0, 0, 1});
  const Vec br = lie_bracket(o2.flow, eta2, x);
  CHECK((br - v({0, -1, 1, 0})).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK((br + o2.flow(x)).lpNorm<Eigen::Infinity>() < 1e-14);

  std::mt19937_64 rng(11);
  const VectorField eta1 = o2.symmetry("eta1").at(0.0);
  for (int k = 0; k < 50; ++k) {
    const Vec y = sample_point(o2, rng);
    CHECK(lie_bracket(eta1, o2.flow, y).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK(lie_bracket(eta2, eta2, y).lpNorm<Eigen::Infinity>() == 0.0);
    // Finite-difference Jacobians give the same bracket.
    const Vec fd_br = lie_bracket(o2.flow.without_closed_forms(), eta2.without_closed_forms(), y);
    CHECK((fd_br - lie_bracket(o2.flow, eta2, y)).lpNorm<Eigen::Infinity>() < 1e-8);
  }

  CHECK_THROWS_AS(lie_bracket(o2.flow, make_system("euler").flow, x), ContractError);
}

TEST_CASE("lie_bracket antisymmetry is exact and Jacobi identity holds") {
  const VectorField a = quadratic_field_a(), b = quadratic_field_b(), c = cubic_field_c();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 100; ++k) {
    const Vec x = v({u(rng), u(rng), u(rng)});
    const Vec ab = lie_bracket(a, b, x);
    const Vec ba = lie_bracket(b, a, x);
    CHECK((ab + ba).lpNorm<Eigen::Infinity>() == 0.0);
    const Vec fd_ab = lie_bracket(a.without_closed_forms(), b.without_closed_forms(), x);
    CHECK((fd_ab - ab).lpNorm<Eigen::Infinity>() < 1e-8);

    const Vec jac = lie_bracket(a, lie_bracket_field(b, c), x) + lie_bracket(b, lie_bracket_field(c, a), x) +
                    lie_bracket(c, lie_bracket_field(a, b), x);
    CHECK(jac.lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("symmetry_residual") {
  const SystemDef o2 = make_system("o2_cartesian");
  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    const Vec x = sample_point(o2, rng);
    for (double t : {0.0, 0.7}) {
      CHECK(symmetry_residual(o2.symmetry("eta2"), o2.flow, x, t) < 1e-9);
      CHECK(symmetry_residual(o2.symmetry("eta1"), o2.flow, x, t) < 1e-9);
    }
    CHECK(symmetry_residual(TimeDependentVectorField(o2.flow), o2.flow, x, 0.3) < 1e-9);
  }
  // A non-symmetry gives a visible residual.
  const TimeDependentVectorField shift("shift", 4, [](const Vec&, double) { return v({1, 0, 0, 0}); },
                                       [](const Vec&, double) { return v({0, 0, 0, 0}); });
  CHECK(symmetry_residual(shift, o2.flow, v({0.3, 0.2, -0.5, 0.4}), 0.0) > 0.1);
}

TEST_CASE("registered invariants and closed-form gradients") {
  for (const auto& name : system_names()) {
    const SystemDef sys = make_system(name);
    std::mt19937_64 rng(17);
    for (int k = 0; k < 100; ++k) {
      const Vec x = sample_point(sys, rng);
      for (const auto& c : sys.invariants) {
        CHECK(std::abs(lie_derivative_scalar(sys.flow, c, x)) < 1e-9);
        CHECK((c.gradient(x) - c.without_closed_forms().gradient(x)).lpNorm<Eigen::Infinity>() < 1e-7);
        CHECK((c.hessian(x) - c.without_closed_forms().hessian(x)).lpNorm<Eigen::Infinity>() < 1e-5);
      }
      CHECK((sys.flow.jacobian(x) - sys.flow.without_closed_forms().jacobian(x)).lpNorm<Eigen::Infinity>() < 1e-7);
    }
  }
}

TEST_CASE("field combinators carry derivatives") {
  const SystemDef ex1 = make_system("example1");
  const ScalarField d = product(ex1.invariant("C1"), ex1.invariant("C2"));
  const Vec x = v({0.8, 1.1, 0.6});
  CHECK((d.gradient(x) - fd::gradient([&](const Vec& y) { return d(y); }, x)).norm() < 1e-9);
  CHECK((d.hessian(x) - fd::hessian([&](const Vec& y) { return d(y); }, x)).norm() < 1e-7);
  CHECK(scaled(d, 2.0)(x) == doctest::Approx(2.0 * d(x)));
  CHECK(sum(d, d)(x) == doctest::Approx(2.0 * d(x)));
}
