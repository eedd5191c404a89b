#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cellpol/config.hpp"
#include "cellpol/error.hpp"
#include "cellpol/experiments.hpp"

namespace {

const char* kAbout = R"(Bulk-surface cell polarization on the unit sphere.

Overrides are dotted keys, either `key=value` or `--key=value`, applied
after --config.  Exit codes: 0 ok, 2 no convergence, 3 invalid config, 4 I/O.)";

std::string describe(const std::string& cmd) {
  if (cmd == "simulate") return "Integrate the time-dependent system";
  if (cmd == "steady") return "Newton solve for a stationary state";
  if (cmd == "obstacle") return "Solve the eps -> 0 obstacle limit";
  if (cmd == "critical-mass") return "Compute alpha0, alpha*, m* and psi";
  if (cmd == "sweep") return "Sweep mass, alpha, eps or D";
  if (cmd == "validate") return "Run the built-in self checks";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{kAbout, "cellpol"};
  app.require_subcommand(0, 1);
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "Print configuration keys with defaults");
  app.set_version_flag("--version", CELLPOL_VERSION);

  std::string config_path, out_dir = "out";
  int workers = 1;
  std::vector<std::string> overrides;
  std::vector<CLI::App*> subs;
  for (const std::string& name : cellpol::command_names()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--workers", workers, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    sub->add_option("overrides", overrides, "key=value overrides");
    sub->allow_extras();
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : cellpol::kExitInvalidConfig;
  }

  if (list_keys) {
    cellpol::RunConfig defaults;
    for (const auto& [k, v] : defaults.values()) std::cout << k << " = " << v << "\n";
    return 0;
  }
  CLI::App* chosen = nullptr;
  for (CLI::App* s : subs)
    if (s->parsed()) chosen = s;
  if (!chosen) {
    std::cout << app.help();
    return cellpol::kExitInvalidConfig;
  }

  cellpol::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = cellpol::RunConfig::from_file(config_path);
    for (std::string item : chosen->remaining()) {
      if (item.rfind("--", 0) == 0) item = item.substr(2);
      overrides.push_back(item);
    }
    for (const std::string& item : overrides) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw cellpol::ConfigError("override '" + item + "' is not key=value");
      cfg.set(item.substr(0, eq), item.substr(eq + 1));
    }
  } catch (const cellpol::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cellpol::kExitIo;
  } catch (const cellpol::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cellpol::kExitInvalidConfig;
  }

  cellpol::CommandResult r = cellpol::run_command(chosen->get_name(), cfg, out_dir, workers);
  if (chosen->get_name() == "validate" && r.summary.contains("checks")) {
    for (const auto& c : r.summary["checks"])
      std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << "  "
                << c["value"].dump() << "\n";
  }
  if (!r.message.empty()) std::cerr << "error: " << r.message << "\n";
  std::cout << chosen->get_name() << ": exit " << r.exit_code << ", outputs in " << out_dir << "\n";
  return r.exit_code;
}
