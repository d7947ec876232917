#pragma once

// Poisson structures: the rank-2 flow/symmetry ansatz, the 3D Casimir
// cross-product family, and numerical checks of their defining identities.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pforge/core.hpp"
#include "pforge/systems.hpp"

namespace pforge {

class PoissonStructure {
 public:
  using MatrixFn = std::function<Mat(const Vec&, double)>;
  /// derivative(x, t)[d](a, b) = d J^{ab} / d x^d
  using DerivativeFn = std::function<std::vector<Mat>(const Vec&, double)>;

  PoissonStructure() = default;
  PoissonStructure(std::string label, int dim, MatrixFn matrix, DerivativeFn derivative = {});

  /// J(x, t); antisymmetric by construction.
  Mat matrix(const Vec& x, double t = 0.0) const;
  /// Closed form when registered, finite differences of `matrix` otherwise.
  std::vector<Mat> derivative(const Vec& x, double t = 0.0) const;
  bool has_closed_derivative() const { return static_cast<bool>(derivative_); }

  int dim() const { return dim_; }
  const std::string& label() const { return label_; }

  std::optional<ScalarField> hamiltonian;
  std::vector<ScalarField> casimirs;
  /// Times at which a time-dependent structure is verified.
  std::vector<double> check_times{0.0};

  PoissonStructure without_closed_derivative() const;

 private:
  std::string label_;
  int dim_ = 0;
  MatrixFn matrix_;
  DerivativeFn derivative_;
};

/// Deformation K = grad H . eta(x, t).
double deformation(const ScalarField& h, const TimeDependentVectorField& eta, const Vec& x, double t);

/// J = (f eta^T - eta f^T) / K with K = grad H . eta. Evaluation throws
/// DomainError when |K| < threshold. H is attached as the Hamiltonian.
PoissonStructure from_flow_symmetry(const VectorField& f, const TimeDependentVectorField& eta,
                                    const ScalarField& h, double threshold = 1e-8,
                                    std::string label = "flow_symmetry");

/// J^{ab} = sign * mu(x) * eps^{abc} d psi / d x^c (3D only). psi is attached
/// as a Casimir.
PoissonStructure from_casimir_3d(const ScalarField& psi, const ScalarField& mu, int sign,
                                 std::string label = "casimir_3d");

/// Structure from an arbitrary matrix field (used for negative controls).
PoissonStructure from_matrix(std::string label, int dim, PoissonStructure::MatrixFn matrix);

/// grad F . J(x) . grad G
double bracket(const PoissonStructure& p, const ScalarField& f, const ScalarField& g, const Vec& x,
               double t = 0.0);

/// max over a<b<c of |J^{ad} d_d J^{bc} + J^{bd} d_d J^{ca} + J^{cd} d_d J^{ab}|
double jacobi_residual(const PoissonStructure& p, const Vec& x, double t = 0.0);

/// max-norm of J grad H - f
double hamilton_residual(const PoissonStructure& p, const ScalarField& h, const VectorField& f,
                         const Vec& x, double t = 0.0);

/// max over attached Casimirs of max-norm of J grad psi
double casimir_residual(const PoissonStructure& p, const Vec& x, double t = 0.0);

/// max |J + J^T|
double antisymmetry_residual(const PoissonStructure& p, const Vec& x, double t = 0.0);

/// Numerical rank: singular values above 1e-10 times the largest.
int rank_at(const PoissonStructure& p, const Vec& x, double t = 0.0);

// ---------------------------------------------------------------------------
// Registry

struct RegisteredStructure {
  PoissonStructure structure;
  ScalarField hamiltonian;
  /// Casimir used for stability analysis and reduction (absent for the
  /// 4D ansatz, which carries its Casimir in structure.casimirs).
  std::optional<ScalarField> psi;
  /// Sign the printed source formula carries; `sign` is the one that
  /// reproduces the flow. They differ for the structures listed in errata.
  int printed_sign = 1;
  int sign = 1;
};

/// Structure labels registered for a system.
std::vector<std::string> structure_labels(std::string_view system);

/// Throws ConfigError for an unregistered (system, label) pair.
RegisteredStructure make_structure(const SystemDef& sys, std::string_view label);

/// Same construction with an explicit sign (used to probe printed signs).
RegisteredStructure make_structure_with_sign(const SystemDef& sys, std::string_view label, int sign);

struct StructureCheck {
  std::string system;
  std::string label;
  int samples = 0;
  double antisymmetry = 0.0;
  double jacobi = 0.0;
  double hamilton = 0.0;
  double casimir = 0.0;
  int rank_min = 0;
  int rank_max = 0;
};

struct StructureThresholds {
  double jacobi = 1e-8;
  double hamilton = 1e-9;
  double casimir = 1e-12;
};

bool passes(const StructureCheck& c, const StructureThresholds& thr);

/// Residual maxima over n_samples seeded points (and every check time).
/// `h_override` replaces the Hamiltonian (negative controls).
StructureCheck check_structure(const SystemDef& sys, const RegisteredStructure& reg, int n_samples,
                               unsigned seed, const std::optional<ScalarField>& h_override = {});

}  // namespace pforge
