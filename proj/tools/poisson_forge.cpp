// poisson_forge: verify | stability | simulate | hj | errata

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pforge/errors.hpp"
#include "pforge/report.hpp"

namespace fs = std::filesystem;
using pforge::Json;

namespace {

struct Options {
  std::string config_path;
  std::string config_inline;
  std::string out;
  std::optional<long> seed;
  std::optional<double> tol;
  bool json = false;
  std::string system;
  std::string structure;
  bool corrupt_h = false;
};

Json load_config(const Options& o) {
  Json j = Json::object();
  if (!o.config_path.empty() && !o.config_inline.empty())
    throw pforge::ConfigError("use either --config or --config-json, not both");
  try {
    if (!o.config_path.empty()) {
      std::ifstream in(o.config_path);
      if (!in) throw pforge::ConfigError("cannot read config file " + o.config_path);
      j = Json::parse(in);
    } else if (!o.config_inline.empty()) {
      j = Json::parse(o.config_inline);
    }
  } catch (const Json::parse_error& e) {
    throw pforge::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw pforge::ConfigError("config must be a JSON object");
  if (!o.system.empty()) {
    if (j.contains("system") && j["system"] != o.system) j.erase("structure");
    j["system"] = o.system;
  }
  if (!o.structure.empty()) j["structure"] = o.structure;
  if (o.seed) j["seed"] = *o.seed;
  if (o.tol) j["rtol"] = *o.tol;
  if (o.corrupt_h) j["corrupt_H"] = true;
  return j;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw pforge::ConfigError("cannot write " + path.string());
  f << text;
  if (!f) throw pforge::ConfigError("write failed for " + path.string());
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + "." + suffix + out.extension().string());
  return p;
}

void summarize(std::ostream& os, const std::string& command, const pforge::CommandResult& r) {
  if (command == "verify") {
    for (const auto& s : r.report["structures"]) {
      os << s["structure"].get<std::string>() << ": " << (s["pass"].get<bool>() ? "PASS" : "FAIL")
         << "  jacobi=" << pforge::format_double(s["jacobi"].get<double>())
         << " hamilton=" << pforge::format_double(s["hamilton"].get<double>())
         << " casimir=" << pforge::format_double(s["casimir"].get<double>());
      if (s.contains("sign_fix"))
        os << "  [sign fix, printed sign gives hamilton="
           << pforge::format_double(s["sign_fix"]["printed_hamilton"].get<double>()) << ']';
      os << '\n';
    }
  } else if (command == "errata") {
    for (const auto& e : r.report["errata"])
      os << e["id"].get<std::string>() << ": " << (e["confirmed"].get<bool>() ? "confirmed" : "NOT confirmed") << '\n';
  }
  for (const auto& f : r.failures) os << "failure: " << f << '\n';
}

int run(const std::string& command, const Options& o) {
  const pforge::RunConfig cfg = pforge::parse_config(load_config(o));
  pforge::CommandResult r;
  if (command == "verify") r = pforge::cmd_verify(cfg);
  else if (command == "stability") r = pforge::cmd_stability(cfg);
  else if (command == "simulate") r = pforge::cmd_simulate(cfg);
  else if (command == "hj") r = pforge::cmd_hj(cfg);
  else r = pforge::cmd_errata(cfg);

  const std::string json_text = r.report.dump(2) + "\n";
  const bool report_only = command == "verify" || command == "errata";
  if (report_only) {
    if (!o.out.empty()) write_file(o.out, json_text);
    if (o.json) std::cout << json_text;
    else summarize(std::cout, command, r);
  } else {
    if (!o.out.empty()) {
      write_file(o.out, r.csv);
      for (const auto& [suffix, text] : r.extra_csv) write_file(sibling(o.out, suffix), text);
    }
    if (o.json) std::cout << json_text;
    else if (o.out.empty()) std::cout << r.csv;
    for (const auto& f : r.failures) std::cerr << "failure: " << f << '\n';
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-canonical Poisson structures: verification, stability audits, Hamilton-Jacobi reduction"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "JSON run configuration");
  app.add_option("--config-json", o.config_inline, "Inline JSON run configuration");
  app.add_option("--out", o.out, "Output path (CSV, or JSON report for verify/errata)");
  app.add_option("--seed", o.seed, "Sampling seed")->check(CLI::NonNegativeNumber);
  app.add_option("--tol", o.tol, "Integrator relative tolerance")->check(CLI::PositiveNumber);
  app.add_flag("--json", o.json, "Print the JSON report on stdout");
  app.add_option("--system", o.system, "System name");
  app.add_option("--structure", o.structure, "Structure label");
  app.add_flag("--corrupt-H", o.corrupt_h, "Double the Hamiltonian (negative control)");
  app.fallthrough();

  std::string command;
  for (const char* name : {"verify", "stability", "simulate", "hj", "errata"}) {
    auto* sub = app.add_subcommand(name);
    sub->callback([&command, name] { command = name; });
  }
  app.get_subcommand("verify")->description("Residuals of the defining identities of every structure");
  app.get_subcommand("stability")->description("Critical points, spectra and Casimir slopes over a multiplier grid");
  app.get_subcommand("simulate")->description("Reference trajectory with invariant columns");
  app.get_subcommand("hj")->description("Reduced dynamics on a level set, lifted and compared with the ODE");
  app.get_subcommand("errata")->description("Printed formulas against implemented ones, with numeric evidence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run(command, o);
  } catch (const pforge::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const pforge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
