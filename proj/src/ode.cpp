#include "pforge/ode.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "pforge/errors.hpp"

namespace pforge {

namespace {

// Dormand-Prince 5(4), first-same-as-last.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// PI step-size controller constants.
constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kMinShrink = 0.2;  // hnew >= 0.2 h
constexpr double kMaxGrow = 10.0;   // hnew <= 10 h

double rms_norm(const Vec& v, const Vec& scale) { return std::sqrt((v.cwiseQuotient(scale)).squaredNorm() / v.size()); }

struct StepOutcome {
  bool truncated = false;
  std::string diagnostic;
};

using StepCallback = std::function<void(const DenseSegment&, double t1, const Vec& y1)>;

StepOutcome run(const VectorField& f, const StatePoint& x0, double t0, double t1, const IntegratorConfig& cfg,
                const StepCallback& on_step) {
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const double hmax = std::min(cfg.max_step, span);
  const auto n = x0.size();

  Vec y = x0;
  Vec k1 = f(y);
  if (!k1.allFinite()) throw DomainError("initial state outside the flow's domain");

  auto scale = [&](const Vec& a, const Vec& b) -> Vec {
    return (cfg.atol + cfg.rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
  };

  // Initial step guess from the local Lipschitz estimate.
  double h;
  {
    const Vec sc = scale(y, y);
    const double dn0 = rms_norm(y, sc), dn1 = rms_norm(k1, sc);
    double h0 = (dn0 < 1e-10 || dn1 < 1e-10) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, hmax);
    Vec k2 = k1;
    try {
      k2 = f(y + dir * h0 * k1);
    } catch (const DomainError&) {
      h0 *= 1e-3;
    }
    const double dn2 = rms_norm(k2 - k1, sc) / h0;
    const double der = std::max(dn1, dn2);
    const double h1 = der <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / der, 0.2);
    h = std::min({100.0 * h0, h1, hmax});
  }

  double t = t0;
  double facold = 1e-4;
  bool last_rejected = false;
  long steps = 0;
  Vec k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y1(n);

  while (dir * (t1 - t) > 0.0) {
    if (++steps > cfg.max_steps) return {true, "maximum number of steps exceeded"};
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      std::ostringstream msg;
      msg << "step size underflow at t = " << t << " (approaching a singular set of the flow?)";
      return {true, msg.str()};
    }
    if (span - dir * (t - t0) <= h * (1.0 + 1e-12)) h = dir * (t1 - t);

    const double hs = dir * h;
    double err;
    try {
      k2 = f(y + hs * (a21 * k1));
      k3 = f(y + hs * (a31 * k1 + a32 * k2));
      k4 = f(y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = f(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = f(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y1 = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = f(y1);
      const Vec err_vec = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      err = rms_norm(err_vec, scale(y, y1));
      if (!std::isfinite(err)) err = 1e10;
    } catch (const DomainError&) {
      err = 1e10;
    }

    const double fac11 = std::pow(err, kExpo);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kMaxGrow, 1.0 / kMinShrink);
      double hnew = h / fac;
      facold = std::max(err, 1e-4);

      DenseSegment seg;
      seg.t0 = t;
      seg.h = hs;
      if (cfg.dense_output) {
        const Vec ydiff = y1 - y;
        const Vec bspl = hs * k1 - ydiff;
        seg.r[0] = y;
        seg.r[1] = ydiff;
        seg.r[2] = bspl;
        seg.r[3] = ydiff - hs * k7 - bspl;
        seg.r[4] = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      }
      t = (std::abs(t1 - (t + hs)) <= 1e-14 * std::max(1.0, std::abs(t1))) ? t1 : t + hs;
      y = y1;
      k1 = k7;
      on_step(seg, t, y);

      hnew = std::min(hnew, hmax);
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = hnew;
    } else {
      h = h / std::min(1.0 / kMinShrink, fac11 / kSafety);
      last_rejected = true;
    }
  }
  return {};
}

void record(Trajectory& tr, double t, const Vec& y, const std::vector<ScalarField>& invariants,
            const std::vector<double>& c0) {
  tr.times.push_back(t);
  tr.states.push_back(y);
  for (std::size_t k = 0; k < invariants.size(); ++k) {
    const double c = invariants[k](y);
    tr.invariant_values[k].push_back(c);
    tr.drifts[k].push_back(std::abs(c - c0[k]));
  }
}

Trajectory prepare(const std::vector<ScalarField>& invariants, const StatePoint& x0, std::vector<double>& c0) {
  Trajectory tr;
  tr.drifts.resize(invariants.size());
  tr.invariant_values.resize(invariants.size());
  for (const auto& c : invariants) {
    tr.invariant_names.push_back(c.name());
    c0.push_back(c(x0));
  }
  return tr;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ContractError("rtol and atol must be positive");
  if (!(max_step > 0.0)) throw ContractError("max_step must be positive");
}

Vec DenseSegment::operator()(double t) const {
  const double s = (t - t0) / h;
  const double s1 = 1.0 - s;
  return r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])));
}

double Trajectory::max_drift(std::size_t k) const {
  if (k >= drifts.size() || drifts[k].empty()) return 0.0;
  return *std::max_element(drifts[k].begin(), drifts[k].end());
}

StatePoint Trajectory::at(double t) const {
  if (segments.empty()) {
    if (!times.empty() && t == times.front()) return states.front();
    throw ContractError("Trajectory::at requires dense output");
  }
  const bool forward = segments.front().h > 0.0;
  auto covers = [&](const DenseSegment& s) {
    const double a = std::min(s.t0, s.t0 + s.h), b = std::max(s.t0, s.t0 + s.h);
    return t >= a && t <= b;
  };
  // Segments are ordered along the integration direction.
  auto it = std::lower_bound(segments.begin(), segments.end(), t, [forward](const DenseSegment& s, double v) {
    return forward ? s.t0 + s.h < v : s.t0 + s.h > v;
  });
  if (it == segments.end() || !covers(*it)) throw ContractError("Trajectory::at: time outside integrated span");
  return (*it)(t);
}

Trajectory integrate(const VectorField& f, const StatePoint& x0, std::pair<double, double> t_span,
                     const std::vector<ScalarField>& invariants, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(t_span.first != t_span.second)) throw ContractError("integrate: degenerate time span");
  if (x0.size() != f.dim()) throw ContractError("integrate: dimension mismatch");
  std::vector<double> c0;
  Trajectory tr = prepare(invariants, x0, c0);
  record(tr, t_span.first, x0, invariants, c0);
  const StepOutcome out = run(f, x0, t_span.first, t_span.second, cfg, [&](const DenseSegment& seg, double t, const Vec& y) {
    if (cfg.dense_output) tr.segments.push_back(seg);
    record(tr, t, y, invariants, c0);
  });
  tr.truncated = out.truncated;
  tr.diagnostic = out.diagnostic;
  return tr;
}

Trajectory integrate_on_grid(const VectorField& f, const StatePoint& x0, const std::vector<double>& grid,
                             const std::vector<ScalarField>& invariants, const IntegratorConfig& cfg) {
  cfg.validate();
  if (grid.empty()) throw ContractError("integrate_on_grid: empty grid");
  if (x0.size() != f.dim()) throw ContractError("integrate_on_grid: dimension mismatch");
  const double dir = grid.size() > 1 && grid.back() < grid.front() ? -1.0 : 1.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(dir * (grid[i] - grid[i - 1]) > 0.0)) throw ContractError("integrate_on_grid: grid must be strictly monotone");

  std::vector<double> c0;
  Trajectory tr = prepare(invariants, x0, c0);
  record(tr, grid.front(), x0, invariants, c0);
  if (grid.size() == 1) return tr;

  IntegratorConfig dense_cfg = cfg;
  dense_cfg.dense_output = true;
  std::size_t next = 1;
  const StepOutcome out = run(f, x0, grid.front(), grid.back(), dense_cfg, [&](const DenseSegment& seg, double t_end, const Vec& y) {
    if (cfg.dense_output) tr.segments.push_back(seg);
    while (next < grid.size() && dir * (grid[next] - t_end) <= 0.0) {
      const Vec ys = (grid[next] == t_end) ? y : seg(grid[next]);
      record(tr, grid[next], ys, invariants, c0);
      ++next;
    }
  });
  tr.truncated = out.truncated;
  tr.diagnostic = out.diagnostic;
  return tr;
}

void write_csv_header(std::ostream& out, std::size_t dim, std::size_t n_invariants) {
  out << "t";
  for (std::size_t i = 1; i <= dim; ++i) out << ",x" << i;
  for (std::size_t k = 1; k <= n_invariants; ++k) out << ",C" << k;
  out << '\n';
}

void write_csv(std::ostream& out, const Trajectory& tr) {
  const auto n = tr.states.empty() ? 0 : tr.states.front().size();
  write_csv_header(out, static_cast<std::size_t>(n), tr.invariant_values.size());
  const auto old_flags = out.flags();
  const auto old_prec = out.precision(17);
  out.unsetf(std::ios::floatfield);
  for (std::size_t r = 0; r < tr.times.size(); ++r) {
    out << tr.times[r];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << tr.states[r][i];
    for (const auto& series : tr.invariant_values) out << ',' << series[r];
    out << '\n';
  }
  out.precision(old_prec);
  out.flags(old_flags);
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n);
  if (n > 0) g.back() = t1;
  return g;
}

}  // namespace pforge
