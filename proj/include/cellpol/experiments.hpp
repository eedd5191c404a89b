#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellpol/config.hpp"

namespace cellpol {

enum ExitCode : int { kExitOk = 0, kExitNonConvergence = 2, kExitInvalidConfig = 3, kExitIo = 4 };

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json summary;
  std::vector<std::string> outputs;  // files written, relative to the output directory
  std::string message;
};

const std::vector<std::string>& command_names();

// Runs one command; writes manifest.json and the command outputs into
// out_dir.  Configuration and I/O failures are mapped to exit codes here.
CommandResult run_command(const std::string& command, const RunConfig& cfg,
                          const std::string& out_dir, int workers = 1);

// Runs fn(i) for i in [0, n) on at most `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace cellpol
