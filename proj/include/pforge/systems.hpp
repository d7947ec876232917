#pragma once

// Registry of the dynamical systems: closed-form flows, invariants,
// symmetry vectors and parameters.

#include <array>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pforge/core.hpp"

namespace pforge {

/// Real polynomial Q(s) = c0 + c1 s + c2 s^2 + ...
class Polynomial {
 public:
  Polynomial() : coeffs_{1.0} {}
  explicit Polynomial(std::vector<double> coeffs);

  double operator()(double s) const;
  double derivative(double s) const;
  double second_derivative(double s) const;
  /// Integral from 0 to s.
  double integral(double s) const;
  const std::vector<double>& coefficients() const { return coeffs_; }

 private:
  std::vector<double> coeffs_;
};

struct ParameterSet {
  /// Branch s of the O(2) polar / Example I family: dX2/dt = s X1^2 cos(Phi).
  int sign_branch = -1;
  /// Coefficients of Q for the Bridges example.
  std::vector<double> poly_q{1.0};
  /// Principal moments for the Euler top.
  std::array<double, 3> inertia{1.0, 2.0, 3.0};

  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// Axis-aligned sampling box with an exclusion radius around the origin.
struct SamplingBox {
  std::vector<double> lower;
  std::vector<double> upper;
  double min_norm = 0.0;
};

struct SystemDef {
  std::string name;
  int dim = 0;
  VectorField flow;
  std::vector<ScalarField> invariants;
  std::vector<TimeDependentVectorField> symmetries;
  ParameterSet params;
  SamplingBox box;

  const ScalarField& invariant(std::string_view name) const;
  const TimeDependentVectorField& symmetry(std::string_view name) const;
};

/// Names accepted by make_system.
std::vector<std::string> system_names();

/// Builds and self-checks a registered system (invariant residuals at 20
/// sample points). Throws ConfigError for unknown names or bad parameters,
/// NumericalError when the self-check fails.
SystemDef make_system(std::string_view name, const ParameterSet& params = {});

/// Uniform draw from the system's sampling box.
StatePoint sample_point(const SystemDef& sys, std::mt19937_64& rng);

/// Max |L_f C| per invariant over n_samples points drawn with `seed`.
std::vector<double> verify_invariants(const SystemDef& sys, int n_samples, unsigned seed = 7);
/// Same, for an explicit list of invariants (used for negative controls).
std::vector<double> verify_invariants(const SystemDef& sys, const std::vector<ScalarField>& invariants,
                                      int n_samples, unsigned seed = 7);

/// (X1,Y1,X2,Y2) -> (r1, r2, Theta = 2 Phi1 - Phi2) with Theta wrapped to (-pi, pi].
StatePoint cartesian_to_polar(const StatePoint& x4);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace pforge
