#include "pforge/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pforge/errors.hpp"

namespace pforge {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

double Polynomial::operator()(double s) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double Polynomial::derivative(double s) const {
  double acc = 0.0;
  for (std::size_t k = coeffs_.size(); k-- > 1;) acc = acc * s + static_cast<double>(k) * coeffs_[k];
  return acc;
}

double Polynomial::second_derivative(double s) const {
  double acc = 0.0;
  for (std::size_t k = coeffs_.size(); k-- > 2;)
    acc = acc * s + static_cast<double>(k * (k - 1)) * coeffs_[k];
  return acc;
}

double Polynomial::integral(double s) const {
  double acc = 0.0;
  for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * s + coeffs_[k] / static_cast<double>(k + 1);
  return acc * s;
}

void ParameterSet::validate() const {
  if (sign_branch != 1 && sign_branch != -1) throw ConfigError("sign_branch must be +1 or -1");
  if (poly_q.empty()) throw ConfigError("poly_q must have at least one coefficient");
  for (double c : poly_q)
    if (!std::isfinite(c)) throw ConfigError("poly_q coefficients must be finite");
  for (double i : inertia)
    if (!(i > 0.0) || !std::isfinite(i)) throw ConfigError("inertia must be strictly positive");
}

const ScalarField& SystemDef::invariant(std::string_view n) const {
  for (const auto& c : invariants)
    if (c.name() == n) return c;
  throw ContractError("system " + name + " has no invariant " + std::string(n));
}

const TimeDependentVectorField& SystemDef::symmetry(std::string_view n) const {
  for (const auto& s : symmetries)
    if (s.name() == n) return s;
  throw ContractError("system " + name + " has no symmetry " + std::string(n));
}

namespace {

constexpr double kPi = std::numbers::pi;

// --- O(2) normal form in cartesian coordinates (X1, Y1, X2, Y2) ----------

Vec o2_flow(const Vec& x) {
  Vec f(4);
  f << x[0] * x[2] + x[1] * x[3], x[0] * x[3] - x[1] * x[2], -x[0] * x[0] + x[1] * x[1],
      -2.0 * x[0] * x[1];
  return f;
}

Mat o2_flow_jacobian(const Vec& x) {
  Mat j(4, 4);
  j << x[2], x[3], x[0], x[1],  //
      x[3], -x[2], -x[1], x[0],  //
      -2.0 * x[0], 2.0 * x[1], 0.0, 0.0,  //
      -2.0 * x[1], -2.0 * x[0], 0.0, 0.0;
  return j;
}

SystemDef build_o2_cartesian(const ParameterSet& params) {
  SystemDef sys;
  sys.name = "o2_cartesian";
  sys.dim = 4;
  sys.params = params;
  sys.flow = VectorField("f", 4, o2_flow, o2_flow_jacobian);

  sys.invariants.emplace_back(
      "C1", [](const Vec& x) { return x.squaredNorm(); }, [](const Vec& x) -> Vec { return 2.0 * x; },
      [](const Vec&) -> Mat { return 2.0 * Mat::Identity(4, 4); });
  sys.invariants.emplace_back(
      "C2",
      [](const Vec& x) { return 2.0 * x[0] * x[1] * x[2] - x[3] * (x[0] * x[0] - x[1] * x[1]); },
      [](const Vec& x) -> Vec {
        Vec g(4);
        g << 2.0 * x[1] * x[2] - 2.0 * x[0] * x[3], 2.0 * x[0] * x[2] + 2.0 * x[1] * x[3],
            2.0 * x[0] * x[1], -(x[0] * x[0] - x[1] * x[1]);
        return g;
      },
      [](const Vec& x) -> Mat {
        Mat h(4, 4);
        h << -2.0 * x[3], 2.0 * x[2], 2.0 * x[1], -2.0 * x[0],  //
            2.0 * x[2], 2.0 * x[3], 2.0 * x[0], 2.0 * x[1],  //
            2.0 * x[1], 2.0 * x[0], 0.0, 0.0,  //
            -2.0 * x[0], 2.0 * x[1], 0.0, 0.0;
        return h;
      });

  // U(1) phase rotation Z1 -> Z1 e^{i phi}, Z2 -> Z2 e^{2 i phi}.
  sys.symmetries.emplace_back(
      "eta1", 4,
      [](const Vec& x, double) -> Vec {
        Vec e(4);
        e << -x[1], x[0], -2.0 * x[3], 2.0 * x[2];
        return e;
      },
      [](const Vec&, double) -> Vec { return Vec::Zero(4); },
      [](const Vec&, double) -> Mat {
        Mat j = Mat::Zero(4, 4);
        j(0, 1) = -1.0;
        j(1, 0) = 1.0;
        j(2, 3) = -2.0;
        j(3, 2) = 2.0;
        return j;
      });
  // Scaling symmetry x -> x, t -> t / lambda written as x + t f(x).
  sys.symmetries.emplace_back(
      "eta2", 4, [](const Vec& x, double t) -> Vec { return x + t * o2_flow(x); },
      [](const Vec& x, double) -> Vec { return o2_flow(x); },
      [](const Vec& x, double t) -> Mat { return Mat::Identity(4, 4) + t * o2_flow_jacobian(x); });

  sys.box = {{-1, -1, -1, -1}, {1, 1, 1, 1}, 0.1};
  return sys;
}

// --- Reduced polar form (r1, r2, angle) shared by o2_polar and example1 ---
//   dr1 = r1 r2 cos a,  dr2 = s r1^2 cos a,  da = -(2 r2 + s r1^2 / r2) sin a

VectorField polar_type_flow(int s) {
  const double sg = s;
  return VectorField(
      "f", 3,
      [sg](const Vec& x) -> Vec {
        if (x[1] == 0.0) throw DomainError("flow undefined at X2 = 0");
        const double c = std::cos(x[2]), sn = std::sin(x[2]);
        Vec f(3);
        f << x[0] * x[1] * c, sg * x[0] * x[0] * c, -(2.0 * x[1] + sg * x[0] * x[0] / x[1]) * sn;
        return f;
      },
      [sg](const Vec& x) -> Mat {
        if (x[1] == 0.0) throw DomainError("flow undefined at X2 = 0");
        const double c = std::cos(x[2]), sn = std::sin(x[2]);
        const double r1 = x[0], r2 = x[1];
        Mat j(3, 3);
        j << r2 * c, r1 * c, -r1 * r2 * sn,  //
            2.0 * sg * r1 * c, 0.0, -sg * r1 * r1 * sn,  //
            -(2.0 * sg * r1 / r2) * sn, -(2.0 - sg * r1 * r1 / (r2 * r2)) * sn,
            -(2.0 * r2 + sg * r1 * r1 / r2) * c;
        return j;
      });
}

ScalarField polar_type_cubic(const char* name) {
  return ScalarField(
      name, [](const Vec& x) { return x[0] * x[0] * x[1] * std::sin(x[2]); },
      [](const Vec& x) -> Vec {
        const double c = std::cos(x[2]), sn = std::sin(x[2]);
        Vec g(3);
        g << 2.0 * x[0] * x[1] * sn, x[0] * x[0] * sn, x[0] * x[0] * x[1] * c;
        return g;
      },
      [](const Vec& x) -> Mat {
        const double c = std::cos(x[2]), sn = std::sin(x[2]);
        const double a = x[0], b = x[1];
        Mat h(3, 3);
        h << 2.0 * b * sn, 2.0 * a * sn, 2.0 * a * b * c,  //
            2.0 * a * sn, 0.0, a * a * c,  //
            2.0 * a * b * c, a * a * c, -a * a * b * sn;
        return h;
      });
}

// weight * (r1^2 - s r2^2)
ScalarField polar_type_quadratic(const char* name, int s, double weight) {
  const double sg = s;
  return ScalarField(
      name, [sg, weight](const Vec& x) { return weight * (x[0] * x[0] - sg * x[1] * x[1]); },
      [sg, weight](const Vec& x) -> Vec {
        Vec g(3);
        g << 2.0 * weight * x[0], -2.0 * weight * sg * x[1], 0.0;
        return g;
      },
      [sg, weight](const Vec&) -> Mat {
        Mat h = Mat::Zero(3, 3);
        h(0, 0) = 2.0 * weight;
        h(1, 1) = -2.0 * weight * sg;
        return h;
      });
}

SystemDef build_o2_polar(const ParameterSet& params) {
  SystemDef sys;
  sys.name = "o2_polar";
  sys.dim = 3;
  sys.params = params;
  sys.flow = polar_type_flow(params.sign_branch);
  sys.invariants.push_back(polar_type_quadratic("C1", params.sign_branch, 1.0));
  sys.invariants.push_back(polar_type_cubic("C2"));
  sys.box = {{0.2, 0.2, -kPi}, {2.0, 2.0, kPi}, 0.0};
  return sys;
}

SystemDef build_example1(const ParameterSet& params) {
  SystemDef sys;
  sys.name = "example1";
  sys.dim = 3;
  sys.params = params;
  sys.flow = polar_type_flow(params.sign_branch);
  sys.invariants.push_back(polar_type_quadratic("C1", params.sign_branch, 0.5));
  sys.invariants.push_back(polar_type_cubic("C2"));
  sys.box = {{0.2, 0.2, 0.0}, {2.0, 2.0, 2.0 * kPi}, 0.0};
  return sys;
}

// --- Bridges example ------------------------------------------------------

SystemDef build_example2(const ParameterSet& params) {
  SystemDef sys;
  sys.name = "example2";
  sys.dim = 3;
  sys.params = params;
  const Polynomial q(params.poly_q);
  sys.flow = VectorField(
      "f", 3,
      [q](const Vec& x) -> Vec {
        const double qv = q(x[0]);
        Vec f(3);
        f << 2.0 * x[2], 2.0 * qv * x[2], x[1] + qv * x[0];
        return f;
      },
      [q](const Vec& x) -> Mat {
        const double qv = q(x[0]), dq = q.derivative(x[0]);
        Mat j(3, 3);
        j << 0.0, 0.0, 2.0,  //
            2.0 * dq * x[2], 0.0, 2.0 * qv,  //
            dq * x[0] + qv, 1.0, 0.0;
        return j;
      });
  sys.invariants.emplace_back(
      "C1", [](const Vec& x) { return x[2] * x[2] - x[0] * x[1]; },
      [](const Vec& x) -> Vec {
        Vec g(3);
        g << -x[1], -x[0], 2.0 * x[2];
        return g;
      },
      [](const Vec&) -> Mat {
        Mat h(3, 3);
        h << 0, -1, 0, -1, 0, 0, 0, 0, 2;
        return h;
      });
  sys.invariants.emplace_back(
      "C2", [q](const Vec& x) { return x[1] - q.integral(x[0]); },
      [q](const Vec& x) -> Vec {
        Vec g(3);
        g << -q(x[0]), 1.0, 0.0;
        return g;
      },
      [q](const Vec& x) -> Mat {
        Mat h = Mat::Zero(3, 3);
        h(0, 0) = -q.derivative(x[0]);
        return h;
      });
  sys.box = {{-2, -2, -2}, {2, 2, 2}, 0.0};
  return sys;
}

// --- Free rigid body, dL/dt = Omega x L -----------------------------------

SystemDef build_euler(const ParameterSet& params) {
  SystemDef sys;
  sys.name = "euler";
  sys.dim = 3;
  sys.params = params;
  const auto [i1, i2, i3] = params.inertia;
  const double a = 1.0 / i2 - 1.0 / i3;
  const double b = 1.0 / i3 - 1.0 / i1;
  const double c = 1.0 / i1 - 1.0 / i2;
  sys.flow = VectorField(
      "f", 3,
      [a, b, c](const Vec& l) -> Vec {
        Vec f(3);
        f << a * l[1] * l[2], b * l[2] * l[0], c * l[0] * l[1];
        return f;
      },
      [a, b, c](const Vec& l) -> Mat {
        Mat j(3, 3);
        j << 0.0, a * l[2], a * l[1],  //
            b * l[2], 0.0, b * l[0],  //
            c * l[1], c * l[0], 0.0;
        return j;
      });
  const Vec inv_i = (Vec(3) << 1.0 / i1, 1.0 / i2, 1.0 / i3).finished();
  sys.invariants.emplace_back(
      "C1", [inv_i](const Vec& l) { return 0.5 * l.cwiseProduct(l).dot(inv_i); },
      [inv_i](const Vec& l) -> Vec { return l.cwiseProduct(inv_i); },
      [inv_i](const Vec&) -> Mat { return inv_i.asDiagonal(); });
  sys.invariants.emplace_back(
      "C2", [](const Vec& l) { return l.squaredNorm(); }, [](const Vec& l) -> Vec { return 2.0 * l; },
      [](const Vec&) -> Mat { return 2.0 * Mat::Identity(3, 3); });
  sys.box = {{-1, -1, -1}, {1, 1, 1}, 0.05};
  return sys;
}

}  // namespace

std::vector<std::string> system_names() {
  return {"o2_cartesian", "o2_polar", "example1", "example2", "euler"};
}

SystemDef make_system(std::string_view name, const ParameterSet& params) {
  params.validate();
  SystemDef sys;
  if (name == "o2_cartesian") {
    sys = build_o2_cartesian(params);
  } else if (name == "o2_polar") {
    sys = build_o2_polar(params);
  } else if (name == "example1") {
    sys = build_example1(params);
  } else if (name == "example2") {
    sys = build_example2(params);
  } else if (name == "euler") {
    sys = build_euler(params);
  } else {
    throw ConfigError("unknown system '" + std::string(name) + "'");
  }

  const auto residuals = verify_invariants(sys, 20, 20240601u);
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    if (!(residuals[k] < 1e-9)) {
      std::ostringstream msg;
      msg << "self-check failed for " << sys.name << ": invariant " << sys.invariants[k].name()
          << " has Lie-derivative residual " << residuals[k];
      throw NumericalError(msg.str());
    }
  }
  return sys;
}

StatePoint sample_point(const SystemDef& sys, std::mt19937_64& rng) {
  const auto n = static_cast<Eigen::Index>(sys.box.lower.size());
  StatePoint x(n);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::uniform_real_distribution<double> u(sys.box.lower[i], sys.box.upper[i]);
      x[i] = u(rng);
    }
    if (x.norm() >= sys.box.min_norm) return x;
  }
  throw NumericalError("sampling box of " + sys.name + " rejects every draw");
}

std::vector<double> verify_invariants(const SystemDef& sys, int n_samples, unsigned seed) {
  return verify_invariants(sys, sys.invariants, n_samples, seed);
}

std::vector<double> verify_invariants(const SystemDef& sys, const std::vector<ScalarField>& invariants,
                                      int n_samples, unsigned seed) {
  if (n_samples < 1) throw ContractError("verify_invariants: n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> worst(invariants.size(), 0.0);
  for (int s = 0; s < n_samples; ++s) {
    const StatePoint x = sample_point(sys, rng);
    for (std::size_t k = 0; k < invariants.size(); ++k)
      worst[k] = std::max(worst[k], std::abs(lie_derivative_scalar(sys.flow, invariants[k], x)));
  }
  return worst;
}

double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

StatePoint cartesian_to_polar(const StatePoint& x4) {
  if (x4.size() != 4) throw ContractError("cartesian_to_polar expects a 4-vector");
  const double r1 = std::hypot(x4[0], x4[1]);
  const double r2 = std::hypot(x4[2], x4[3]);
  if (r1 == 0.0 || r2 == 0.0) throw DomainError("cartesian_to_polar: zero radius");
  const double phi1 = std::atan2(x4[1], x4[0]);
  const double phi2 = std::atan2(x4[3], x4[2]);
  StatePoint p(3);
  p << r1, r2, wrap_angle(2.0 * phi1 - phi2);
  return p;
}

}  // namespace pforge
