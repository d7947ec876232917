#include "pforge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "pforge/errors.hpp"
#include "pforge/hj.hpp"
#include "pforge/parallel.hpp"
#include "pforge/stability.hpp"

namespace pforge {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

double as_number(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("config key '" + key + "' must be finite");
  return d;
}

long as_integer(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<long>();
}

std::vector<double> as_numbers(const Json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_number(e, key));
  return out;
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ConfigError("unknown config key '" + where + k + "'");
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

RunConfig parse_config(const Json& j) {
  reject_unknown(j,
                 {"system", "structure", "params", "seed", "samples", "thresholds", "corrupt_H", "multipliers", "x0",
                  "t_span", "n_out", "rtol", "atol", "energy", "level", "q_init", "branch", "max_deviation"},
                 "");
  RunConfig c;
  if (j.contains("system")) {
    if (!j["system"].is_string()) throw ConfigError("config key 'system' must be a string");
    c.system = j["system"].get<std::string>();
  }
  if (!contains(system_names(), c.system)) throw ConfigError("unknown system '" + c.system + "'");
  if (j.contains("structure")) {
    if (!j["structure"].is_string()) throw ConfigError("config key 'structure' must be a string");
    c.structure = j["structure"].get<std::string>();
    if (!c.structure.empty() && !contains(structure_labels(c.system), c.structure))
      throw ConfigError("no structure '" + c.structure + "' registered for system " + c.system);
  }
  if (j.contains("params")) {
    const Json& p = j["params"];
    reject_unknown(p, {"sign_branch", "poly_q", "inertia"}, "params.");
    if (p.contains("sign_branch")) c.params.sign_branch = static_cast<int>(as_integer(p["sign_branch"], "params.sign_branch"));
    if (p.contains("poly_q")) c.params.poly_q = as_numbers(p["poly_q"], "params.poly_q");
    if (p.contains("inertia")) {
      const auto v = as_numbers(p["inertia"], "params.inertia");
      if (v.size() != 3) throw ConfigError("params.inertia needs three moments");
      c.params.inertia = {v[0], v[1], v[2]};
    }
  }
  c.params.validate();
  if (j.contains("seed")) {
    const long s = as_integer(j["seed"], "seed");
    if (s < 0 || s > 0xffffffffL) throw ConfigError("seed must be in [0, 2^32)");
    c.seed = static_cast<unsigned>(s);
  }
  if (j.contains("samples")) {
    c.samples = static_cast<int>(as_integer(j["samples"], "samples"));
    if (c.samples < 1) throw ConfigError("samples must be positive");
  }
  if (j.contains("thresholds")) {
    const Json& t = j["thresholds"];
    reject_unknown(t, {"jacobi", "hamilton", "casimir"}, "thresholds.");
    if (t.contains("jacobi")) c.thresholds.jacobi = as_number(t["jacobi"], "thresholds.jacobi");
    if (t.contains("hamilton")) c.thresholds.hamilton = as_number(t["hamilton"], "thresholds.hamilton");
    if (t.contains("casimir")) c.thresholds.casimir = as_number(t["casimir"], "thresholds.casimir");
    if (!(c.thresholds.jacobi > 0 && c.thresholds.hamilton > 0 && c.thresholds.casimir > 0))
      throw ConfigError("thresholds must be positive");
  }
  if (j.contains("corrupt_H")) {
    if (!j["corrupt_H"].is_boolean()) throw ConfigError("config key 'corrupt_H' must be a boolean");
    c.corrupt_h = j["corrupt_H"].get<bool>();
  }
  if (j.contains("multipliers")) {
    c.multipliers = as_numbers(j["multipliers"], "multipliers");
    for (double m : c.multipliers)
      if (m == 0.0) throw ConfigError("multipliers must be nonzero");
  }
  if (j.contains("x0")) c.x0 = as_numbers(j["x0"], "x0");
  if (j.contains("t_span")) {
    const auto v = as_numbers(j["t_span"], "t_span");
    if (v.size() != 2) throw ConfigError("t_span needs two entries");
    c.t_span = std::pair{v[0], v[1]};
  }
  if (j.contains("n_out")) {
    c.n_out = static_cast<int>(as_integer(j["n_out"], "n_out"));
    if (c.n_out < 1) throw ConfigError("n_out must be positive");
  }
  if (j.contains("rtol")) c.rtol = as_number(j["rtol"], "rtol");
  if (j.contains("atol")) c.atol = as_number(j["atol"], "atol");
  if ((c.rtol && !(*c.rtol > 0)) || (c.atol && !(*c.atol > 0))) throw ConfigError("rtol and atol must be positive");
  if (j.contains("energy")) c.energy = as_number(j["energy"], "energy");
  if (j.contains("level")) c.level = as_number(j["level"], "level");
  if (j.contains("q_init")) c.q_init = as_number(j["q_init"], "q_init");
  if (j.contains("branch")) {
    c.branch = static_cast<int>(as_integer(j["branch"], "branch"));
    if (c.branch != 1 && c.branch != -1) throw ConfigError("branch must be +1 or -1");
  }
  if (j.contains("max_deviation")) {
    c.max_deviation = as_number(j["max_deviation"], "max_deviation");
    if (!(c.max_deviation > 0)) throw ConfigError("max_deviation must be positive");
  }
  return c;
}

RunConfig default_config() { return parse_config(Json::object()); }

Json to_json(const StructureCheck& c) {
  return Json{{"system", c.system},     {"structure", c.label},   {"samples", c.samples},
              {"antisymmetry", c.antisymmetry}, {"jacobi", c.jacobi}, {"hamilton", c.hamilton},
              {"casimir", c.casimir},   {"rank_min", c.rank_min}, {"rank_max", c.rank_max}};
}

Json to_json(const Erratum& e) {
  return Json{{"id", e.id},
              {"printed", e.printed},
              {"implemented", e.implemented},
              {"evidence", e.evidence},
              {"confirmed", e.confirmed}};
}

namespace {

Json report_header(const std::string& command, const RunConfig& cfg) {
  Json r;
  r["schema_version"] = kSchemaVersion;
  r["command"] = command;
  r["system"] = cfg.system;
  r["seed"] = cfg.seed;
  return r;
}

SystemDef system_of(const RunConfig& cfg) { return make_system(cfg.system, cfg.params); }

std::vector<std::string> labels_of(const RunConfig& cfg, const std::vector<std::string>& registered) {
  if (cfg.structure.empty()) return registered;
  if (!contains(registered, cfg.structure))
    throw ConfigError("structure '" + cfg.structure + "' is not available for this command on " + cfg.system);
  return {cfg.structure};
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::string csv_of(const Trajectory& tr) {
  std::ostringstream os;
  write_csv(os, tr);
  return os.str();
}

double max_state_error(const Trajectory& a, const Trajectory& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(a.states.size(), b.states.size()); ++i)
    worst = std::max(worst, (a.states[i] - b.states[i]).lpNorm<Eigen::Infinity>());
  return worst;
}

}  // namespace

// ---------------------------------------------------------------------------
// verify

CommandResult cmd_verify(const RunConfig& cfg) {
  const SystemDef sys = system_of(cfg);
  const auto labels = labels_of(cfg, structure_labels(cfg.system));
  CommandResult out;
  out.report = report_header("verify", cfg);
  out.report["samples"] = cfg.samples;
  out.report["corrupt_H"] = cfg.corrupt_h;
  out.report["thresholds"] = {{"jacobi", cfg.thresholds.jacobi},
                              {"hamilton", cfg.thresholds.hamilton},
                              {"casimir", cfg.thresholds.casimir}};

  const auto inv = verify_invariants(sys, cfg.samples, cfg.seed);
  Json invariants = Json::array();
  for (std::size_t k = 0; k < inv.size(); ++k) {
    const bool ok = inv[k] < cfg.thresholds.hamilton;
    invariants.push_back({{"name", sys.invariants[k].name()}, {"lie_derivative", inv[k]}, {"pass", ok}});
    if (!ok) out.failures.push_back("invariant " + sys.invariants[k].name() + " is not conserved");
  }
  out.report["invariants"] = invariants;

  struct Row {
    StructureCheck check;
    std::optional<StructureCheck> printed;
    int printed_sign = 1;
    int sign = 1;
  };
  std::vector<Row> rows(labels.size());
  parallel_for(labels.size(), [&](std::size_t i) {
    const auto reg = make_structure(sys, labels[i]);
    std::optional<ScalarField> h;
    if (cfg.corrupt_h) h = scaled(reg.hamiltonian, 2.0);
    rows[i].check = check_structure(sys, reg, cfg.samples, cfg.seed, h);
    rows[i].printed_sign = reg.printed_sign;
    rows[i].sign = reg.sign;
    if (reg.printed_sign != reg.sign)
      rows[i].printed = check_structure(sys, make_structure_with_sign(sys, labels[i], reg.printed_sign), cfg.samples,
                                        cfg.seed, h);
  });

  Json structures = Json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    Json s = to_json(r.check);
    const bool ok = passes(r.check, cfg.thresholds);
    s["pass"] = ok;
    if (r.printed) {
      s["sign_fix"] = {{"printed_sign", r.printed_sign},
                       {"registered_sign", r.sign},
                       {"printed_hamilton", r.printed->hamilton},
                       {"erratum", "sign_" + labels[i]}};
    }
    if (!ok) {
      std::ostringstream msg;
      msg << labels[i] << ":";
      if (r.check.antisymmetry != 0.0) msg << " antisymmetry " << format_double(r.check.antisymmetry);
      if (!(r.check.jacobi < cfg.thresholds.jacobi)) msg << " jacobi " << format_double(r.check.jacobi);
      if (!(r.check.hamilton < cfg.thresholds.hamilton)) msg << " hamilton " << format_double(r.check.hamilton);
      if (!(r.check.casimir < cfg.thresholds.casimir)) msg << " casimir " << format_double(r.check.casimir);
      out.failures.push_back(msg.str());
    }
    structures.push_back(s);
  }
  out.report["structures"] = structures;
  out.report["failures"] = out.failures;
  out.report["pass"] = out.failures.empty();
  out.exit_code = out.failures.empty() ? 0 : 1;
  return out;
}

// ---------------------------------------------------------------------------
// stability

CommandResult cmd_stability(const RunConfig& cfg) {
  const SystemDef sys = system_of(cfg);
  if (sys.name != "example1" && sys.name != "example2")
    throw ConfigError("stability audits are registered for example1 and example2 only");
  const auto labels = labels_of(cfg, structure_labels(cfg.system));
  CommandResult out;
  out.report = report_header("stability", cfg);

  std::ostringstream csv;
  csv << "structure,multiplier_name,multiplier,x1,x2,x3,mu2,casimir_slope,hamiltonian_slope,classification\n";
  Json audits = Json::array();
  std::string reference;
  std::vector<std::string> relations;
  for (const auto& label : labels) {
    const auto pair = make_structure_pair(sys, label);
    std::vector<double> grid = cfg.multipliers;
    if (grid.empty()) {
      const double sgn = pair.anchor < 0.0 ? -1.0 : 1.0;
      for (double m : {0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0}) grid.push_back(sgn * m);
    }
    const auto audit = bridges_report(sys, pair, grid, reference);
    if (reference.empty()) reference = audit.relation;
    relations.push_back(audit.relation);
    Json rows = Json::array();
    for (const auto& r : audit.reports) {
      const Vec& x = r.critical_point.state;
      csv << label << ',' << pair.multiplier_name << ',' << format_double(r.multiplier) << ','
          << format_double(x[0]) << ',' << format_double(x[1]) << ',' << format_double(x[2]) << ','
          << format_double(r.mu_squared) << ',' << format_double(r.casimir_slope) << ','
          << format_double(r.hamiltonian_slope) << ',' << to_string(r.classification) << '\n';
      Json ev = Json::array();
      for (const auto& z : r.eigenvalues) ev.push_back({z.real(), z.imag()});
      rows.push_back({{"multiplier", r.multiplier},
                      {"critical_point", vec_json(x)},
                      {"eigenvalues", ev},
                      {"mu_squared", r.mu_squared},
                      {"casimir_slope", r.casimir_slope},
                      {"hamiltonian_slope", r.hamiltonian_slope},
                      {"classification", to_string(r.classification)}});
    }
    audits.push_back({{"structure", label},
                      {"multiplier_name", pair.multiplier_name},
                      {"relation", audit.relation},
                      {"matches_reference", audit.matches_reference},
                      {"rows", rows}});
  }
  out.report["audits"] = audits;
  if (relations.size() == 2) {
    const bool consistent = relations[0] != "inconsistent" && relations[1] != "inconsistent";
    out.report["verdicts_opposite"] = consistent && relations[0] != relations[1];
  }
  out.csv = csv.str();
  return out;
}

// ---------------------------------------------------------------------------
// simulate

namespace {

struct SimDefaults {
  std::vector<double> x0;
  std::pair<double, double> span;
  int n_out;
};

SimDefaults simulate_defaults(const std::string& system) {
  if (system == "o2_cartesian") return {{0.6, 0.3, 0.5, -0.4}, {0.0, 10.0}, 1000};
  if (system == "o2_polar") {
    const Vec p = cartesian_to_polar(to_vec({0.6, 0.3, 0.5, -0.4}));
    return {{p[0], p[1], p[2]}, {0.0, 10.0}, 1000};
  }
  if (system == "example1") return {{1.0, 1.0, std::numbers::pi / 6}, {0.0, 10.0}, 1000};
  if (system == "example2") return {{0.5, -0.3, 0.2}, {0.0, 4.0}, 400};
  return {{0.2, 0.3, 0.9}, {0.0, 50.0}, 5000};
}

IntegratorConfig integrator_of(const RunConfig& cfg, double rtol, double atol) {
  IntegratorConfig ic;
  ic.rtol = cfg.rtol.value_or(rtol);
  ic.atol = cfg.atol.value_or(cfg.rtol ? ic.rtol * 1e-2 : atol);
  return ic;
}

}  // namespace

CommandResult cmd_simulate(const RunConfig& cfg) {
  const SystemDef sys = system_of(cfg);
  const auto def = simulate_defaults(cfg.system);
  const Vec x0 = to_vec(cfg.x0.value_or(def.x0));
  if (x0.size() != sys.dim) throw ConfigError("x0 must have " + std::to_string(sys.dim) + " entries");
  const auto span = cfg.t_span.value_or(def.span);
  const int n = cfg.n_out > 0 ? cfg.n_out : def.n_out;
  const IntegratorConfig ic = integrator_of(cfg, 1e-10, 1e-12);

  CommandResult out;
  out.report = report_header("simulate", cfg);
  out.report["x0"] = vec_json(x0);
  out.report["t_span"] = {span.first, span.second};
  out.report["rtol"] = ic.rtol;
  out.report["atol"] = ic.atol;

  if (span.first == span.second) {
    std::ostringstream os;
    write_csv_header(os, static_cast<std::size_t>(sys.dim), sys.invariants.size());
    out.csv = os.str();
    out.report["rows"] = 0;
    return out;
  }

  const auto grid = uniform_grid(span.first, span.second, static_cast<std::size_t>(n));
  const auto tr = integrate_on_grid(sys.flow, x0, grid, sys.invariants, ic);
  out.csv = csv_of(tr);
  out.report["rows"] = tr.times.size();
  Json drift = Json::object();
  for (std::size_t k = 0; k < tr.invariant_names.size(); ++k) drift[tr.invariant_names[k]] = tr.max_drift(k);
  out.report["max_drift"] = drift;
  out.report["truncated"] = tr.truncated;
  if (tr.truncated) {
    out.report["diagnostic"] = tr.diagnostic;
    out.failures.push_back("integration truncated: " + tr.diagnostic);
    out.exit_code = 3;
  }

  if (sys.name == "o2_cartesian" && !tr.truncated) {
    const SystemDef polar = make_system("o2_polar", cfg.params);
    const auto pt = integrate_on_grid(polar.flow, cartesian_to_polar(x0), grid, polar.invariants, ic);
    double dev = 0.0;
    for (std::size_t i = 0; i < std::min(pt.states.size(), tr.states.size()); ++i) {
      const Vec mapped = cartesian_to_polar(tr.states[i]);
      dev = std::max({dev, std::abs(mapped[0] - pt.states[i][0]), std::abs(mapped[1] - pt.states[i][1]),
                      std::abs(wrap_angle(mapped[2] - pt.states[i][2]))});
    }
    out.extra_csv.emplace_back("polar", csv_of(pt));
    out.report["polar_max_deviation"] = dev;
    if (!(dev < cfg.max_deviation)) {
      out.failures.push_back("polar image deviates by " + format_double(dev));
      out.exit_code = std::max(out.exit_code, 1);
    }
  }
  out.report["failures"] = out.failures;
  return out;
}

// ---------------------------------------------------------------------------
// hj

namespace {

std::pair<double, double> hj_default_span(const std::string& system) {
  if (system == "example1") return {0.0, 5.5};
  if (system == "example2") return {0.0, 2.0};
  return {0.0, 30.0};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

CommandResult cmd_hj(const RunConfig& cfg) {
  const SystemDef sys = system_of(cfg);
  const auto registered = chart_structures(cfg.system);
  if (registered.empty()) throw ConfigError("no canonical chart registered for system " + cfg.system);
  const auto labels = labels_of(cfg, registered);
  if (!cfg.x0 && !(cfg.energy && cfg.level && cfg.q_init))
    throw ConfigError("hj needs either x0 or all of energy, level and q_init");
  const auto span = cfg.t_span.value_or(hj_default_span(cfg.system));
  if (span.first == span.second) throw ConfigError("hj needs a nonempty t_span");
  const int n = cfg.n_out > 0 ? cfg.n_out : 400;
  const auto grid = uniform_grid(span.first, span.second, static_cast<std::size_t>(n));
  IntegratorConfig ic = integrator_of(cfg, 1e-12, 1e-14);

  CommandResult out;
  out.report = report_header("hj", cfg);
  out.report["t_span"] = {span.first, span.second};
  out.report["rtol"] = ic.rtol;
  out.report["atol"] = ic.atol;
  out.report["max_deviation_allowed"] = cfg.max_deviation;

  std::optional<Vec> x0;
  if (cfg.x0) {
    x0 = to_vec(*cfg.x0);
    if (x0->size() != sys.dim) throw ConfigError("x0 must have " + std::to_string(sys.dim) + " entries");
    out.report["x0"] = vec_json(*x0);
  }

  std::vector<Trajectory> lifted;
  Json charts = Json::array();
  auto fail = [&](const std::string& what, int code) {
    out.failures.push_back(what);
    out.exit_code = std::max(out.exit_code, code);
  };
  for (const auto& label : labels) {
    const auto rs = reduced_hamiltonian(sys, label);
    double e = 0.0, level = 0.0, q = 0.0;
    int branch = cfg.branch;
    if (x0) {
      const auto cs = chart_state(rs, *x0);
      e = cs.energy;
      level = cs.point.level;
      q = cs.point.q;
      branch = cs.branch;
    } else {
      e = *cfg.energy;
      level = *cfg.level;
      q = *cfg.q_init;
    }
    const auto sol = hj_trajectory(rs, e, level, q, branch, grid, ic);
    Json c{{"structure", label},
           {"map", rs.map.name},
           {"energy", e},
           {"level", level},
           {"q_init", sol.q_init},
           {"p_init", sol.p_init},
           {"branch", branch},
           {"max_energy_error", sol.max_energy_error},
           {"max_level_error", sol.max_level_error},
           {"half_period_measured", optional_json(sol.half_period_measured)},
           {"half_period_quadrature", optional_json(sol.half_period_quadrature)},
           {"truncated", sol.truncated}};
    if (sol.truncated) {
      c["diagnostic"] = sol.diagnostic;
      fail(label + ": reduced integration truncated: " + sol.diagnostic, 3);
      charts.push_back(c);
      continue;
    }
    const Vec& start = sol.lifted.states.front();
    if (x0) c["start_mismatch"] = (start - *x0).lpNorm<Eigen::Infinity>();
    const auto full = integrate_on_grid(sys.flow, start, grid, sys.invariants, ic);
    if (full.truncated) fail(label + ": direct integration truncated: " + full.diagnostic, 3);
    const double dev = max_state_error(sol.lifted, full);
    c["max_deviation_vs_ode"] = dev;
    if (!(dev < cfg.max_deviation)) fail(label + ": lifted trajectory deviates from the ODE by " + format_double(dev), 1);

    if (sys.name == "euler") {
      const auto ph = euler_phase(sys.params.inertia, start);
      std::vector<double> shifted(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) shifted[i] = grid[i] - grid.front();
      const auto cf = euler_closed_form(sys.params.inertia, ph.energy, ph.lambda, ph.t0, shifted, ph.sigma);
      c["closed_form"] = {{"modulus", ph.modulus}, {"period", ph.period()}, {"max_deviation", max_state_error(cf, sol.lifted)}};
    } else if (sys.name == "example2" && sys.params.poly_q == std::vector<double>{1.0}) {
      const double cc = start[1] - start[0];
      const double ee = start[2] * start[2] - start[0] * start[1];
      try {
        const auto cf = ex2_closed_form(cc, ee, start[0] + start[2] + 0.5 * cc, grid.front(), grid);
        c["closed_form"] = {{"max_deviation", max_state_error(cf, sol.lifted)}};
      } catch (const DomainError& err) {
        c["closed_form"] = {{"skipped", err.what()}};
      }
    }
    lifted.push_back(sol.lifted);
    charts.push_back(c);
  }
  out.report["charts"] = charts;
  if (x0 && lifted.size() == 2) {
    const double cross = max_state_error(lifted[0], lifted[1]);
    out.report["cross_structure_max_deviation"] = cross;
    if (!(cross < cfg.max_deviation)) fail("structures disagree by " + format_double(cross), 1);
  }
  if (!lifted.empty()) out.csv = csv_of(lifted.front());
  for (std::size_t i = 1; i < lifted.size(); ++i) out.extra_csv.emplace_back(labels[i], csv_of(lifted[i]));
  out.report["failures"] = out.failures;
  return out;
}

// ---------------------------------------------------------------------------
// errata

CommandResult cmd_errata(const RunConfig& cfg) {
  CommandResult out;
  out.report = report_header("errata", cfg);
  Json list = Json::array();
  for (const auto& e : collect_errata(cfg.seed)) {
    list.push_back(to_json(e));
    if (!e.confirmed) out.failures.push_back(e.id + ": evidence does not separate printed and implemented forms");
  }
  out.report["errata"] = list;
  out.report["failures"] = out.failures;
  out.exit_code = out.failures.empty() ? 0 : 1;
  return out;
}

}  // namespace pforge
