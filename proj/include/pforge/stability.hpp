#pragma once

// Critical points on Casimir level sets, linearization, spectra and the
// Casimir-slope audit across alternative Hamiltonian/Casimir splits.

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pforge/core.hpp"
#include "pforge/poisson.hpp"
#include "pforge/systems.hpp"

namespace pforge {

/// Solution of grad H - multiplier * grad Psi = 0.
struct CriticalPoint {
  StatePoint state;
  double multiplier = 0.0;
  std::string structure_label;
};

enum class Classification { elliptic, hyperbolic, degenerate };
std::string to_string(Classification c);

/// Newton iteration at fixed multiplier; residual < 1e-11 within 50 steps.
/// Throws NumericalError on non-convergence or a singular Newton matrix.
CriticalPoint solve_critical(const ScalarField& h, const ScalarField& psi, double multiplier, const StatePoint& x0);

/// Jacobian of the flow at x. Prints a warning to std::clog when |f(x)| >= 1e-8.
Mat linearize_flow(const VectorField& f, const StatePoint& x);

/// J(P_c) (D^2 H - m D^2 Psi)(P_c); for J = sign mu eps grad psi this is
/// -sign mu [grad psi x](D^2 H - m D^2 Psi), the flow Jacobian at P_c.
Mat linearize_poisson(const PoissonStructure& p, const ScalarField& h, const ScalarField& psi,
                      const CriticalPoint& cp);

/// Roots of the characteristic cubic, sorted by |Im|, then Re, then Im.
std::array<std::complex<double>, 3> eigenvalues_3x3(const Mat& a);

/// mu^2 of the pair left after removing the eigenvalue closest to zero.
double mu_squared(const std::array<std::complex<double>, 3>& ev);

Classification classify(double mu2);

struct CasimirSlope {
  double dpsi_dm = 0.0;
  double dh_dm = 0.0;
};

/// Central differences of Psi(P_c(m)) and H(P_c(m)); the neighbouring
/// critical points are found by solve_critical seeded at cp.
CasimirSlope casimir_slope(const ScalarField& h, const ScalarField& psi, const CriticalPoint& cp, double delta);

/// Default derivative step 1e-4 max(1, |m|).
double default_slope_step(double multiplier);

/// A Hamiltonian/Casimir split of a 3D system with its anchor for
/// continuation along the critical curve.
struct StructurePair {
  std::string system;
  std::string label;
  RegisteredStructure reg;
  /// Reported multiplier = multiplier_sign * internal m.
  int multiplier_sign = 1;
  std::string multiplier_name = "lambda";
  double anchor = 1.0;
  StatePoint anchor_seed;
};

/// Throws ConfigError for systems without an isolated critical curve.
StructurePair make_structure_pair(const SystemDef& sys, std::string_view label);

/// Critical point at a reported multiplier, by continuation from the anchor.
CriticalPoint critical_point_at(const StructurePair& pair, double reported_multiplier);

struct StabilityReport {
  CriticalPoint critical_point;
  /// Reported multiplier (paper sign convention).
  double multiplier = 0.0;
  Mat linearization;
  Mat flow_linearization;
  std::array<std::complex<double>, 3> eigenvalues;
  double mu_squared = 0.0;
  /// Derivatives with respect to the reported multiplier.
  double casimir_slope = 0.0;
  double hamiltonian_slope = 0.0;
  Classification classification = Classification::degenerate;
};

StabilityReport stability_at(const SystemDef& sys, const StructurePair& pair, double reported_multiplier);

struct BridgesAudit {
  std::string system;
  std::string label;
  std::vector<StabilityReport> reports;
  /// "elliptic<=>slope<0", "elliptic<=>slope>0" or "inconsistent".
  std::string relation;
  /// Whether the relation is the one obtained for the first registered structure.
  bool matches_reference = false;
};

/// Reports over the grid (evaluated in parallel, ordered as the grid).
/// `reference_relation` empty means this audit is the reference.
BridgesAudit bridges_report(const SystemDef& sys, const StructurePair& pair, const std::vector<double>& grid,
                            const std::string& reference_relation = {});

/// Relative equilibrium L = (0, a, 0) of the Euler top with the multiplier
/// of the given structure (1/(2 I2) for euler1, I2 for euler2).
CriticalPoint euler_relative_equilibrium(const SystemDef& sys, std::string_view label, double a);

}  // namespace pforge
