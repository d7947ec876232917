#pragma once

// Reference trajectories by adaptive Dormand-Prince 5(4) integration with
// invariant-drift auditing.

#include <array>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pforge/core.hpp"

namespace pforge {

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  bool dense_output = false;
  long max_steps = 5'000'000;

  void validate() const;
};

/// One accepted step of the continuous extension:
/// y(t0 + s h) = r0 + s (r1 + (1 - s)(r2 + s (r3 + (1 - s) r4)))
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec, 5> r;

  Vec operator()(double t) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StatePoint> states;
  std::vector<std::string> invariant_names;
  /// invariant_values[k][i] = C_k(x_i); drifts[k][i] = |C_k(x_i) - C_k(x_0)|
  std::vector<std::vector<double>> invariant_values;
  std::vector<std::vector<double>> drifts;
  std::vector<DenseSegment> segments;
  bool truncated = false;
  std::string diagnostic;

  double max_drift(std::size_t k) const;
  /// Dense interpolation; requires dense_output. Throws ContractError outside the covered span.
  StatePoint at(double t) const;
  double end_time() const { return times.empty() ? 0.0 : times.back(); }
};

/// Integrates from t_span.first to t_span.second (either direction), one
/// sample per accepted step. Step underflow (e.g. near a singular set of the
/// flow) truncates the trajectory and records a diagnostic.
Trajectory integrate(const VectorField& f, const StatePoint& x0, std::pair<double, double> t_span,
                     const std::vector<ScalarField>& invariants, const IntegratorConfig& cfg);

/// Same integration, sampled exactly at the (monotone) grid times by dense output.
Trajectory integrate_on_grid(const VectorField& f, const StatePoint& x0, const std::vector<double>& grid,
                             const std::vector<ScalarField>& invariants, const IntegratorConfig& cfg);

/// Header "t,x1..xN,C1..CK" then one row per sample, 17 significant digits.
void write_csv_header(std::ostream& out, std::size_t dim, std::size_t n_invariants);
void write_csv(std::ostream& out, const Trajectory& tr);

/// n + 1 equally spaced times covering [t0, t1].
std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

}  // namespace pforge
