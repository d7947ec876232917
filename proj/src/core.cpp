#include "pforge/core.hpp"

#include <cmath>
#include <limits>

#include "pforge/errors.hpp"

namespace pforge {

namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw DomainError("non-finite field value inside finite-difference stencil");
  return v;
}

Vec checked(Vec v) {
  if (!v.allFinite()) throw DomainError("non-finite field value inside finite-difference stencil");
  return v;
}

double coordinate_step(double base, double xi) { return base * std::max(1.0, std::abs(xi)); }

void require_dim(const Vec& x, int dim, const char* what) {
  if (x.size() != dim) throw ContractError(std::string(what) + ": dimension mismatch");
}

}  // namespace

namespace fd {

double default_gradient_step() {
  static const double h = std::pow(std::numeric_limits<double>::epsilon(), 0.2);
  return h;
}

double default_hessian_step() {
  static const double h = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / 6.0);
  return h;
}

Vec gradient(const std::function<double(const Vec&)>& fn, const Vec& x, std::optional<double> h) {
  const double base = h.value_or(default_gradient_step());
  Vec g(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = coordinate_step(base, x[i]);
    auto central = [&](double s) {
      xp[i] = x[i] + s;
      const double fp = checked(fn(xp));
      xp[i] = x[i] - s;
      const double fm = checked(fn(xp));
      xp[i] = x[i];
      return (fp - fm) / (2.0 * s);
    };
    const double coarse = central(step);
    const double fine = central(0.5 * step);
    g[i] = (4.0 * fine - coarse) / 3.0;
  }
  return g;
}

Mat hessian(const std::function<double(const Vec&)>& fn, const Vec& x, std::optional<double> h) {
  const double base = h.value_or(default_hessian_step());
  const auto n = x.size();
  Mat hess(n, n);
  const double f0 = checked(fn(x));
  Vec xp = x;
  auto at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
    xp = x;
    xp[i] += si;
    xp[j] += sj;
    return checked(fn(xp));
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = coordinate_step(base, x[i]);
    auto diag = [&](double s) { return (at(i, s, i, 0.0) - 2.0 * f0 + at(i, -s, i, 0.0)) / (s * s); };
    hess(i, i) = (4.0 * diag(0.5 * hi) - diag(hi)) / 3.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = coordinate_step(base, x[j]);
      auto mixed = [&](double a, double b) {
        return (at(i, a, j, b) - at(i, a, j, -b) - at(i, -a, j, b) + at(i, -a, j, -b)) / (4.0 * a * b);
      };
      const double v = (4.0 * mixed(0.5 * hi, 0.5 * hj) - mixed(hi, hj)) / 3.0;
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

Mat jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x, std::optional<double> h) {
  const double base = h.value_or(default_gradient_step());
  const Vec f0 = checked(fn(x));
  Mat jac(f0.size(), x.size());
  Vec xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = coordinate_step(base, x[j]);
    auto central = [&](double s) -> Vec {
      xp[j] = x[j] + s;
      const Vec fp = checked(fn(xp));
      xp[j] = x[j] - s;
      const Vec fm = checked(fn(xp));
      xp[j] = x[j];
      return (fp - fm) / (2.0 * s);
    };
    const Vec coarse = central(step);
    const Vec fine = central(0.5 * step);
    jac.col(j) = (4.0 * fine - coarse) / 3.0;
  }
  return jac;
}

}  // namespace fd

// ---------------------------------------------------------------------------

ScalarField::ScalarField(std::string name, ValueFn value, GradientFn gradient, HessianFn hessian)
    : name_(std::move(name)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)) {}

Vec ScalarField::gradient(const Vec& x) const {
  if (gradient_) return gradient_(x);
  return fd::gradient(value_, x);
}

Mat ScalarField::hessian(const Vec& x) const {
  if (hessian_) return hessian_(x);
  if (gradient_) {
    Mat h = fd::jacobian(gradient_, x);
    return 0.5 * (h + h.transpose());
  }
  Mat h = fd::hessian(value_, x);
  return 0.5 * (h + h.transpose());
}

ScalarField ScalarField::without_closed_forms() const { return ScalarField(name_, value_); }

ScalarField constant_field(double c, int dim) {
  return ScalarField(
      "const", [c](const Vec&) { return c; }, [dim](const Vec&) { return Vec::Zero(dim); },
      [dim](const Vec&) { return Mat::Zero(dim, dim); });
}

ScalarField scaled(const ScalarField& a, double k) {
  return ScalarField(
      a.name(), [a, k](const Vec& x) { return k * a(x); },
      [a, k](const Vec& x) -> Vec { return k * a.gradient(x); },
      [a, k](const Vec& x) -> Mat { return k * a.hessian(x); });
}

ScalarField sum(const ScalarField& a, const ScalarField& b) {
  return ScalarField(
      a.name() + "+" + b.name(), [a, b](const Vec& x) { return a(x) + b(x); },
      [a, b](const Vec& x) -> Vec { return a.gradient(x) + b.gradient(x); },
      [a, b](const Vec& x) -> Mat { return a.hessian(x) + b.hessian(x); });
}

ScalarField product(const ScalarField& a, const ScalarField& b) {
  return ScalarField(
      a.name() + "*" + b.name(), [a, b](const Vec& x) { return a(x) * b(x); },
      [a, b](const Vec& x) -> Vec { return b(x) * a.gradient(x) + a(x) * b.gradient(x); },
      [a, b](const Vec& x) -> Mat {
        const Vec ga = a.gradient(x);
        const Vec gb = b.gradient(x);
        return b(x) * a.hessian(x) + a(x) * b.hessian(x) + ga * gb.transpose() + gb * ga.transpose();
      });
}

// ---------------------------------------------------------------------------

VectorField::VectorField(std::string name, int dim, ValueFn value, JacobianFn jacobian)
    : name_(std::move(name)), dim_(dim), value_(std::move(value)), jacobian_(std::move(jacobian)) {}

Vec VectorField::operator()(const Vec& x) const {
  require_dim(x, dim_, "VectorField");
  return value_(x);
}

Mat VectorField::jacobian(const Vec& x) const {
  require_dim(x, dim_, "VectorField::jacobian");
  if (jacobian_) return jacobian_(x);
  return fd::jacobian(value_, x);
}

VectorField VectorField::without_closed_forms() const { return VectorField(name_, dim_, value_); }

VectorField linear_field(const Mat& a, std::string name) {
  return VectorField(
      std::move(name), static_cast<int>(a.cols()), [a](const Vec& x) -> Vec { return a * x; },
      [a](const Vec&) -> Mat { return a; });
}

// ---------------------------------------------------------------------------

TimeDependentVectorField::TimeDependentVectorField(std::string name, int dim, ValueFn value,
                                                   ValueFn partial_t, JacobianFn jacobian)
    : name_(std::move(name)),
      dim_(dim),
      value_(std::move(value)),
      partial_t_(std::move(partial_t)),
      jacobian_(std::move(jacobian)) {}

TimeDependentVectorField::TimeDependentVectorField(const VectorField& autonomous)
    : name_(autonomous.name()), dim_(autonomous.dim()) {
  value_ = [autonomous](const Vec& x, double) { return autonomous(x); };
  partial_t_ = [n = dim_](const Vec&, double) -> Vec { return Vec::Zero(n); };
  jacobian_ = [autonomous](const Vec& x, double) { return autonomous.jacobian(x); };
}

Vec TimeDependentVectorField::operator()(const Vec& x, double t) const {
  require_dim(x, dim_, "TimeDependentVectorField");
  return value_(x, t);
}

Vec TimeDependentVectorField::partial_t(const Vec& x, double t) const {
  require_dim(x, dim_, "TimeDependentVectorField::partial_t");
  return partial_t_(x, t);
}

Mat TimeDependentVectorField::jacobian(const Vec& x, double t) const {
  require_dim(x, dim_, "TimeDependentVectorField::jacobian");
  if (jacobian_) return jacobian_(x, t);
  return fd::jacobian([this, t](const Vec& y) { return value_(y, t); }, x);
}

VectorField TimeDependentVectorField::at(double t) const {
  auto self = *this;
  return VectorField(
      name_, dim_, [self, t](const Vec& x) { return self(x, t); },
      [self, t](const Vec& x) { return self.jacobian(x, t); });
}

// ---------------------------------------------------------------------------

double lie_derivative_scalar(const VectorField& f, const ScalarField& c, const Vec& x) {
  require_dim(x, f.dim(), "lie_derivative_scalar");
  const Vec g = c.gradient(x);
  if (g.size() != f.dim()) throw ContractError("lie_derivative_scalar: dimension mismatch");
  return g.dot(f(x));
}

Vec lie_bracket(const VectorField& a, const VectorField& b, const Vec& x) {
  if (a.dim() != b.dim()) throw ContractError("lie_bracket: dimension mismatch");
  require_dim(x, a.dim(), "lie_bracket");
  const Vec av = a(x);
  const Vec bv = b(x);
  const Vec b_along_a = b.jacobian(x) * av;
  const Vec a_along_b = a.jacobian(x) * bv;
  return b_along_a - a_along_b;
}

VectorField lie_bracket_field(const VectorField& a, const VectorField& b) {
  if (a.dim() != b.dim()) throw ContractError("lie_bracket_field: dimension mismatch");
  return VectorField("[" + a.name() + "," + b.name() + "]", a.dim(),
                     [a, b](const Vec& x) { return lie_bracket(a, b, x); });
}

double symmetry_residual(const TimeDependentVectorField& eta, const VectorField& f, const Vec& x,
                         double t) {
  if (eta.dim() != f.dim()) throw ContractError("symmetry_residual: dimension mismatch");
  const Vec r = eta.partial_t(x, t) + lie_bracket(f, eta.at(t), x);
  return r.lpNorm<Eigen::Infinity>();
}

}  // namespace pforge
