#pragma once

// Scalar and vector fields over double-precision state vectors, with
// closed-form or finite-difference derivatives, Lie derivatives and
// Lie brackets.

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace pforge {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point of phase space. Length equals the owning system's dimension.
using StatePoint = Eigen::VectorXd;

namespace fd {

/// Base step for first derivatives (scaled by max(1,|x_i|) per coordinate).
double default_gradient_step();
/// Base step for second derivatives.
double default_hessian_step();

/// Central differences with one Richardson level, O(h^4).
/// Throws DomainError if the function is non-finite anywhere on the stencil.
Vec gradient(const std::function<double(const Vec&)>& fn, const Vec& x,
             std::optional<double> h = std::nullopt);
Mat hessian(const std::function<double(const Vec&)>& fn, const Vec& x,
            std::optional<double> h = std::nullopt);
/// Column j holds d(fn)/dx_j.
Mat jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x,
             std::optional<double> h = std::nullopt);

}  // namespace fd

class ScalarField {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradientFn = std::function<Vec(const Vec&)>;
  using HessianFn = std::function<Mat(const Vec&)>;

  ScalarField() = default;
  ScalarField(std::string name, ValueFn value, GradientFn gradient = {},
              HessianFn hessian = {});

  double operator()(const Vec& x) const { return value_(x); }

  /// Closed form when registered, finite differences otherwise.
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  bool has_closed_gradient() const { return static_cast<bool>(gradient_); }
  bool has_closed_hessian() const { return static_cast<bool>(hessian_); }
  const std::string& name() const { return name_; }
  explicit operator bool() const { return static_cast<bool>(value_); }

  /// Same values with every closed form dropped (forces finite differences).
  ScalarField without_closed_forms() const;

 private:
  std::string name_;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

ScalarField constant_field(double c, int dim);
ScalarField scaled(const ScalarField& a, double k);
ScalarField sum(const ScalarField& a, const ScalarField& b);
ScalarField product(const ScalarField& a, const ScalarField& b);

class VectorField {
 public:
  using ValueFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;

  VectorField() = default;
  VectorField(std::string name, int dim, ValueFn value, JacobianFn jacobian = {});

  Vec operator()(const Vec& x) const;
  /// J(i,j) = d f^i / d x^j.
  Mat jacobian(const Vec& x) const;

  int dim() const { return dim_; }
  bool has_closed_jacobian() const { return static_cast<bool>(jacobian_); }
  const std::string& name() const { return name_; }
  VectorField without_closed_forms() const;

 private:
  std::string name_;
  int dim_ = 0;
  ValueFn value_;
  JacobianFn jacobian_;
};

/// Linear field x -> A x with exact Jacobian.
VectorField linear_field(const Mat& a, std::string name = "linear");

class TimeDependentVectorField {
 public:
  using ValueFn = std::function<Vec(const Vec&, double)>;
  using JacobianFn = std::function<Mat(const Vec&, double)>;

  TimeDependentVectorField() = default;
  TimeDependentVectorField(std::string name, int dim, ValueFn value,
                           ValueFn partial_t, JacobianFn jacobian = {});
  /// Wraps an autonomous field (partial_t = 0).
  explicit TimeDependentVectorField(const VectorField& autonomous);

  Vec operator()(const Vec& x, double t) const;
  Vec partial_t(const Vec& x, double t) const;
  Mat jacobian(const Vec& x, double t) const;

  /// The spatial field at frozen time t.
  VectorField at(double t) const;

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int dim_ = 0;
  ValueFn value_;
  ValueFn partial_t_;
  JacobianFn jacobian_;
};

/// grad C(x) . f(x)
double lie_derivative_scalar(const VectorField& f, const ScalarField& c, const Vec& x);

/// [a,b] = (a.grad) b - (b.grad) a
Vec lie_bracket(const VectorField& a, const VectorField& b, const Vec& x);

/// [a,b] as a field; its Jacobian is taken by finite differences.
VectorField lie_bracket_field(const VectorField& a, const VectorField& b);

/// max-norm of d_t eta + [f, eta]; zero for a true symmetry of f.
double symmetry_residual(const TimeDependentVectorField& eta, const VectorField& f,
                         const Vec& x, double t);

}  // namespace pforge
