#include "pforge/poisson.hpp"

#include <algorithm>
#include <cmath>

#include "pforge/errors.hpp"

namespace pforge {

namespace {

// M^{ab} = eps^{abc} v_c
Mat eps_contract(const Vec& v) {
  Mat m(3, 3);
  m << 0.0, v[2], -v[1],  //
      -v[2], 0.0, v[0],  //
      v[1], -v[0], 0.0;
  return m;
}

}  // namespace

PoissonStructure::PoissonStructure(std::string label, int dim, MatrixFn matrix, DerivativeFn derivative)
    : label_(std::move(label)), dim_(dim), matrix_(std::move(matrix)), derivative_(std::move(derivative)) {}

Mat PoissonStructure::matrix(const Vec& x, double t) const {
  if (x.size() != dim_) throw ContractError("PoissonStructure " + label_ + ": dimension mismatch");
  return matrix_(x, t);
}

std::vector<Mat> PoissonStructure::derivative(const Vec& x, double t) const {
  if (x.size() != dim_) throw ContractError("PoissonStructure " + label_ + ": dimension mismatch");
  if (derivative_) return derivative_(x, t);
  const int n = dim_;
  const Mat flat = fd::jacobian(
      [this, t, n](const Vec& y) -> Vec {
        Mat j = matrix_(y, t);
        return Eigen::Map<const Vec>(j.data(), static_cast<Eigen::Index>(n) * n);
      },
      x);
  std::vector<Mat> out;
  out.reserve(n);
  for (int d = 0; d < n; ++d) out.emplace_back(Eigen::Map<const Mat>(flat.col(d).data(), n, n));
  return out;
}

PoissonStructure PoissonStructure::without_closed_derivative() const {
  PoissonStructure copy = *this;
  copy.derivative_ = {};
  return copy;
}

double deformation(const ScalarField& h, const TimeDependentVectorField& eta, const Vec& x, double t) {
  return h.gradient(x).dot(eta(x, t));
}

PoissonStructure from_flow_symmetry(const VectorField& f, const TimeDependentVectorField& eta,
                                    const ScalarField& h, double threshold, std::string label) {
  if (f.dim() != eta.dim()) throw ContractError("from_flow_symmetry: dimension mismatch");
  const int n = f.dim();
  auto checked_k = [h, eta, threshold](const Vec& x, double t) {
    const double k = deformation(h, eta, x, t);
    if (!(std::abs(k) >= threshold))
      throw DomainError("degenerate deformation: |K| = " + std::to_string(std::abs(k)) +
                        " below threshold");
    return k;
  };
  auto matrix = [f, eta, checked_k, n](const Vec& x, double t) -> Mat {
    const double k = checked_k(x, t);
    const Vec fv = f(x);
    const Vec ev = eta(x, t);
    Mat j(n, n);
    for (int a = 0; a < n; ++a) {
      j(a, a) = 0.0;
      for (int b = a + 1; b < n; ++b) {
        const double v = (fv[a] * ev[b] - fv[b] * ev[a]) / k;
        j(a, b) = v;
        j(b, a) = -v;
      }
    }
    return j;
  };
  auto derivative = [f, eta, h, checked_k, n](const Vec& x, double t) {
    const double k = checked_k(x, t);
    const Vec fv = f(x);
    const Vec ev = eta(x, t);
    const Mat df = f.jacobian(x);
    const Mat de = eta.jacobian(x, t);
    // d_d K = H_{dc} eta^c + dH_c d_d eta^c
    const Vec dk = h.hessian(x) * ev + de.transpose() * h.gradient(x);
    std::vector<Mat> out(n, Mat::Zero(n, n));
    for (int d = 0; d < n; ++d) {
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          const double num = fv[a] * ev[b] - fv[b] * ev[a];
          const double dnum = df(a, d) * ev[b] + fv[a] * de(b, d) - df(b, d) * ev[a] - fv[b] * de(a, d);
          const double v = (dnum - num * dk[d] / k) / k;
          out[d](a, b) = v;
          out[d](b, a) = -v;
        }
      }
    }
    return out;
  };
  PoissonStructure p(std::move(label), n, matrix, derivative);
  p.hamiltonian = h;
  return p;
}

PoissonStructure from_casimir_3d(const ScalarField& psi, const ScalarField& mu, int sign, std::string label) {
  if (sign != 1 && sign != -1) throw ContractError("from_casimir_3d: sign must be +1 or -1");
  const double s = sign;
  auto matrix = [psi, mu, s](const Vec& x, double) -> Mat {
    if (x.size() != 3) throw ContractError("from_casimir_3d: dim must be 3");
    return (s * mu(x)) * eps_contract(psi.gradient(x));
  };
  auto derivative = [psi, mu, s](const Vec& x, double) {
    const Vec g = psi.gradient(x);
    const Mat hess = psi.hessian(x);
    const Vec dmu = mu.gradient(x);
    const double m = mu(x);
    const Mat eg = eps_contract(g);
    std::vector<Mat> out;
    out.reserve(3);
    for (int d = 0; d < 3; ++d) out.push_back(s * (dmu[d] * eg + m * eps_contract(hess.col(d))));
    return out;
  };
  PoissonStructure p(std::move(label), 3, matrix, derivative);
  p.casimirs.push_back(psi);
  return p;
}

PoissonStructure from_matrix(std::string label, int dim, PoissonStructure::MatrixFn matrix) {
  return PoissonStructure(std::move(label), dim, std::move(matrix));
}

double bracket(const PoissonStructure& p, const ScalarField& f, const ScalarField& g, const Vec& x,
               double t) {
  return f.gradient(x).dot(p.matrix(x, t) * g.gradient(x));
}

double jacobi_residual(const PoissonStructure& p, const Vec& x, double t) {
  const Mat j = p.matrix(x, t);
  const std::vector<Mat> dj = p.derivative(x, t);
  const int n = p.dim();
  double worst = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        double s = 0.0;
        for (int d = 0; d < n; ++d)
          s += j(a, d) * dj[d](b, c) + j(b, d) * dj[d](c, a) + j(c, d) * dj[d](a, b);
        worst = std::max(worst, std::abs(s));
      }
    }
  }
  return worst;
}

double hamilton_residual(const PoissonStructure& p, const ScalarField& h, const VectorField& f, const Vec& x,
                         double t) {
  return (p.matrix(x, t) * h.gradient(x) - f(x)).lpNorm<Eigen::Infinity>();
}

double casimir_residual(const PoissonStructure& p, const Vec& x, double t) {
  if (p.casimirs.empty()) return 0.0;
  const Mat j = p.matrix(x, t);
  double worst = 0.0;
  for (const auto& c : p.casimirs) worst = std::max(worst, (j * c.gradient(x)).lpNorm<Eigen::Infinity>());
  return worst;
}

double antisymmetry_residual(const PoissonStructure& p, const Vec& x, double t) {
  const Mat j = p.matrix(x, t);
  return (j + j.transpose()).lpNorm<Eigen::Infinity>();
}

int rank_at(const PoissonStructure& p, const Vec& x, double t) {
  const Mat j = p.matrix(x, t);
  const Vec sv = Eigen::JacobiSVD<Mat>(j).singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  return static_cast<int>((sv.array() > 1e-10 * sv[0]).count());
}

// ---------------------------------------------------------------------------
// Registry

namespace {

ScalarField inverse_x1x2() {
  return ScalarField(
      "1/(X1 X2)", [](const Vec& x) { return 1.0 / (x[0] * x[1]); },
      [](const Vec& x) -> Vec {
        Vec g(3);
        g << -1.0 / (x[0] * x[0] * x[1]), -1.0 / (x[0] * x[1] * x[1]), 0.0;
        return g;
      },
      [](const Vec& x) -> Mat {
        const double a = x[0], b = x[1];
        Mat h = Mat::Zero(3, 3);
        h(0, 0) = 2.0 / (a * a * a * b);
        h(1, 1) = 2.0 / (a * b * b * b);
        h(0, 1) = h(1, 0) = 1.0 / (a * a * b * b);
        return h;
      });
}

// C2^2 / C1^3 : annihilated by both the flow and the scaling symmetry.
ScalarField o2_scale_invariant(const ScalarField& c1, const ScalarField& c2) {
  return ScalarField(
      "C2^2/C1^3",
      [c1, c2](const Vec& x) {
        const double a = c1(x), b = c2(x);
        return b * b / (a * a * a);
      },
      [c1, c2](const Vec& x) -> Vec {
        const double a = c1(x), b = c2(x);
        return (2.0 * b / (a * a * a)) * c2.gradient(x) - (3.0 * b * b / (a * a * a * a)) * c1.gradient(x);
      });
}

struct CasimirSpec {
  const char* h;
  const char* psi;
  double h_scale;
  int sign;
  int printed_sign;
  bool mu_inverse_x1x2;
  double mu_const;
};

RegisteredStructure build_casimir(const SystemDef& sys, const std::string& label, const CasimirSpec& spec,
                                  int sign) {
  const ScalarField mu = spec.mu_inverse_x1x2 ? inverse_x1x2() : constant_field(spec.mu_const, 3);
  const ScalarField psi = sys.invariant(spec.psi);
  ScalarField h = sys.invariant(spec.h);
  if (spec.h_scale != 1.0) h = scaled(h, spec.h_scale);
  RegisteredStructure reg{from_casimir_3d(psi, mu, sign, label), h, psi, spec.printed_sign, sign};
  reg.structure.hamiltonian = h;
  return reg;
}

std::optional<CasimirSpec> casimir_spec(const SystemDef& sys, std::string_view label) {
  const int s = sys.params.sign_branch;
  if (sys.name == "example1") {
    if (label == "pois1") return CasimirSpec{"C1", "C2", 1.0, -s, 1, true, 1.0};
    if (label == "pois2") return CasimirSpec{"C2", "C1", 1.0, s, -1, true, 1.0};
  } else if (sys.name == "example2") {
    if (label == "pois12") return CasimirSpec{"C1", "C2", 1.0, -1, 1, false, 1.0};
    if (label == "pois22") return CasimirSpec{"C2", "C1", 1.0, 1, 1, false, 1.0};
  } else if (sys.name == "euler") {
    if (label == "euler1") return CasimirSpec{"C1", "C2", 1.0, 1, 1, false, 0.5};
    if (label == "euler2") return CasimirSpec{"C2", "C1", 0.5, -1, 1, false, 1.0};
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> structure_labels(std::string_view system) {
  if (system == "example1") return {"pois1", "pois2"};
  if (system == "example2") return {"pois12", "pois22"};
  if (system == "euler") return {"euler1", "euler2"};
  if (system == "o2_cartesian") return {"ansatz_c1", "ansatz_c2"};
  return {};
}

RegisteredStructure make_structure_with_sign(const SystemDef& sys, std::string_view label, int sign) {
  if (auto spec = casimir_spec(sys, label)) return build_casimir(sys, std::string(label), *spec, sign);
  if (sys.name == "o2_cartesian" && (label == "ansatz_c1" || label == "ansatz_c2")) {
    const ScalarField& h = sys.invariant(label == "ansatz_c1" ? "C1" : "C2");
    RegisteredStructure reg{from_flow_symmetry(sys.flow, sys.symmetry("eta2"), h, 1e-8, std::string(label)), h,
                            std::nullopt, 1, 1};
    reg.structure.casimirs.push_back(o2_scale_invariant(sys.invariant("C1"), sys.invariant("C2")));
    reg.structure.check_times = {0.0, 0.5, 1.0};
    return reg;
  }
  throw ConfigError("no structure '" + std::string(label) + "' registered for system " + sys.name);
}

RegisteredStructure make_structure(const SystemDef& sys, std::string_view label) {
  if (auto spec = casimir_spec(sys, label)) return build_casimir(sys, std::string(label), *spec, spec->sign);
  return make_structure_with_sign(sys, label, 1);
}

bool passes(const StructureCheck& c, const StructureThresholds& thr) {
  return c.antisymmetry == 0.0 && c.jacobi < thr.jacobi && c.hamilton < thr.hamilton && c.casimir < thr.casimir;
}

StructureCheck check_structure(const SystemDef& sys, const RegisteredStructure& reg, int n_samples,
                               unsigned seed, const std::optional<ScalarField>& h_override) {
  const PoissonStructure& p = reg.structure;
  const ScalarField& h = h_override ? *h_override : reg.hamiltonian;
  StructureCheck out;
  out.system = sys.name;
  out.label = p.label();
  out.rank_min = p.dim();
  std::mt19937_64 rng(seed);
  int accepted = 0;
  int draws = 0;
  while (accepted < n_samples) {
    if (++draws > 100 * n_samples + 100) throw NumericalError("structure " + p.label() + ": no admissible samples");
    const StatePoint x = sample_point(sys, rng);
    // Keep away from degenerate deformations so residuals stay well-conditioned.
    bool admissible = true;
    for (double t : p.check_times) {
      if (p.hamiltonian && !reg.psi && std::abs(deformation(*p.hamiltonian, sys.symmetry("eta2"), x, t)) < 0.05)
        admissible = false;
    }
    if (!admissible) continue;
    ++accepted;
    for (double t : p.check_times) {
      out.antisymmetry = std::max(out.antisymmetry, antisymmetry_residual(p, x, t));
      out.jacobi = std::max(out.jacobi, jacobi_residual(p, x, t));
      out.hamilton = std::max(out.hamilton, hamilton_residual(p, h, sys.flow, x, t));
      out.casimir = std::max(out.casimir, casimir_residual(p, x, t));
      const int r = rank_at(p, x, t);
      out.rank_min = std::min(out.rank_min, r);
      out.rank_max = std::max(out.rank_max, r);
    }
  }
  out.samples = accepted;
  return out;
}

}  // namespace pforge
