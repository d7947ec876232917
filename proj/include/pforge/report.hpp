#pragma once

// Run configuration, command drivers and the errata catalogue behind the
// command-line front end. Every driver returns a JSON report (schema_version 1)
// and, where relevant, CSV text; nothing here writes to files.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pforge/ode.hpp"
#include "pforge/poisson.hpp"
#include "pforge/systems.hpp"

namespace pforge {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string system = "example1";
  /// Empty means every registered structure of the system.
  std::string structure;
  ParameterSet params;
  unsigned seed = 7;
  int samples = 100;
  StructureThresholds thresholds;
  bool corrupt_h = false;

  // stability
  std::vector<double> multipliers;

  // simulate / hj
  std::optional<std::vector<double>> x0;
  std::optional<std::pair<double, double>> t_span;
  /// Output intervals (rows - 1); 0 picks the per-system default.
  int n_out = 0;
  std::optional<double> rtol;
  std::optional<double> atol;

  // hj
  std::optional<double> energy;
  std::optional<double> level;
  std::optional<double> q_init;
  int branch = 1;
  double max_deviation = 1e-6;
};

/// Strict parse: unknown keys, wrong types and invalid values throw ConfigError.
RunConfig parse_config(const Json& j);

/// Equivalent of parse_config on an empty document.
RunConfig default_config();

struct CommandResult {
  Json report;
  /// Primary CSV output (empty when the command has none).
  std::string csv;
  /// Additional CSV outputs keyed by a file-name suffix.
  std::vector<std::pair<std::string, std::string>> extra_csv;
  /// 0 pass, 1 verification failure, 3 numerical failure.
  int exit_code = 0;
  std::vector<std::string> failures;
};

CommandResult cmd_verify(const RunConfig& cfg);
CommandResult cmd_stability(const RunConfig& cfg);
CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_hj(const RunConfig& cfg);
CommandResult cmd_errata(const RunConfig& cfg);

struct Erratum {
  std::string id;
  std::string printed;
  std::string implemented;
  /// Named numbers backing the correction.
  Json evidence;
  /// True when the evidence separates the printed form from the implemented one.
  bool confirmed = false;
};

std::vector<Erratum> collect_errata(unsigned seed);

Json to_json(const Erratum& e);
Json to_json(const StructureCheck& c);

/// 17 significant digits, shortest general form (as in the CSV outputs).
std::string format_double(double v);

}  // namespace pforge
