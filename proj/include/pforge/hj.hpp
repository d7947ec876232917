#pragma once

// Canonical charts on Casimir level sets, reduced Hamiltonians, separable
// quadratures and closed-form solutions.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pforge/core.hpp"
#include "pforge/ode.hpp"
#include "pforge/poisson.hpp"
#include "pforge/systems.hpp"

namespace pforge {

struct ChartPoint {
  double q = 0.0;
  double p = 0.0;
  double level = 0.0;
};

struct PoissonMap {
  std::string name;
  std::function<StatePoint(double q, double p, double level)> forward;
  std::function<ChartPoint(const StatePoint&)> inverse;
  std::function<bool(double q, double p, double level)> domain;
  /// Box {q_lo, q_hi, p_lo, p_hi} used for canonicity sampling.
  std::array<double, 4> sample_box{};
};

using ChartFn = std::function<double(double q, double p, double level)>;

/// Reduced dynamics on one level set. On shell, |dq/dt| = rate(q, level) * sqrt(radicand(q, E, level)).
struct ReducedSystem {
  std::string system;
  std::string structure;
  PoissonMap map;
  RegisteredStructure reg;
  VectorField flow;
  std::vector<ScalarField> invariants;
  ChartFn hamiltonian;
  ChartFn dh_dq;
  ChartFn dh_dp;
  std::function<double(double q, double energy, double level)> radicand;
  std::function<double(double q, double level)> rate;
  /// p on the branch where sign(dq/dt) = branch.
  std::function<double(double q, double energy, double level, int branch)> momentum;
  /// Lower bound on q accepted for initial conditions (0 when unrestricted).
  double q_floor = -INFINITY;
};

/// Registered (system, structure) pairs with a chart.
std::vector<std::string> chart_structures(std::string_view system);

/// Throws ConfigError for an unregistered pair.
ReducedSystem reduced_hamiltonian(const SystemDef& sys, std::string_view structure);

struct BracketCheck {
  double residual = 0.0;
  int evaluated = 0;
  int skipped = 0;
};

/// max |{q o inv, p o inv}_M - 1| over seeded chart samples at the given level.
BracketCheck pullback_bracket_residual(const ReducedSystem& rs, double level, int samples, unsigned seed = 3);

/// Chart coordinates, energy and branch of a full state.
struct ChartState {
  ChartPoint point;
  double energy = 0.0;
  int branch = 1;
};
ChartState chart_state(const ReducedSystem& rs, const StatePoint& x);

/// Sorted roots of the radicand in the window (sign-change bracketing, bisection to 1e-12).
std::vector<double> turning_points(const ReducedSystem& rs, double energy, double level,
                                   std::pair<double, double> q_window);

/// Time to go from q0 to q1 along one monotone branch. Throws DomainError
/// for an interior turning point or an off-shell endpoint.
double time_of_flight(const ReducedSystem& rs, double q0, double q1, double energy, double level);

struct HJSolution {
  double energy = 0.0;
  double level = 0.0;
  int branch = 1;
  double q_init = 0.0;
  double p_init = 0.0;
  /// Reduced (q, p) trajectory; dense output retained.
  Trajectory reduced;
  /// Lifted trajectory on the full phase space with the system invariants.
  Trajectory lifted;
  double max_energy_error = 0.0;
  double max_level_error = 0.0;
  /// Times where dq/dt changes sign.
  std::vector<double> extrema;
  /// Time between the first two extrema, measured and by quadrature.
  std::optional<double> half_period_measured;
  std::optional<double> half_period_quadrature;
  bool truncated = false;
  std::string diagnostic;
};

HJSolution hj_trajectory(const ReducedSystem& rs, double energy, double level, double q_init, int branch,
                         const std::vector<double>& t_grid, const IntegratorConfig& cfg = {});

/// Times where g(x(t)) changes sign on a dense trajectory, refined by bisection.
std::vector<double> sign_change_times(const Trajectory& tr, const std::function<double(const Vec&)>& g);

// ---------------------------------------------------------------------------
// Euler top closed form

struct EulerPhase {
  double energy = 0.0;
  double lambda = 0.0;
  double t0 = 0.0;
  int sigma = 1;
  double modulus = 0.0;
  double rate = 0.0;
  /// Axes 1 and 3 exchanged (2 E I1 < lambda < 2 E I2).
  bool swapped = false;
  double period() const;
};

/// Constants and phase of the closed form through L0 at t = 0.
EulerPhase euler_phase(const std::array<double, 3>& inertia, const StatePoint& l0);

/// L1 = A1 cn(tau), L2 = -sigma A2 sn(tau), L3 = sigma A3 dn(tau) with
/// tau = rate (t - t0), in the axis labelling where lambda > 2 E I2.
/// Throws DomainError off the branch and for the separatrix (m = 1).
Trajectory euler_closed_form(const std::array<double, 3>& inertia, double energy, double lambda, double t0,
                             const std::vector<double>& t_grid, int sigma = 1);

// ---------------------------------------------------------------------------
// Bridges example, Q(s) = 1

/// w = B e^{2(t - t0)}, k^2 = E - c^2/4:
/// X1 = w/2 - c/2 - k^2/(2w), X2 = X1 + c, X3 = w/2 + k^2/(2w).
Trajectory ex2_closed_form(double level, double energy, double b, double t0, const std::vector<double>& t_grid);

/// The exponential solution in its published form (A = sqrt(E) + c/2); kept for the errata report.
StatePoint ex2_published_solution(double level, double energy, double t0, double t);

/// Closed-form flight time for Q = 1 on map a: (1/2) ln(2 sqrt(R) + 2q + c) between the endpoints.
double ex2_flight_time(double q0, double q1, double energy, double level);

}  // namespace pforge
