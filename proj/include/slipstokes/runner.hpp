#pragma once

#include "slipstokes/config.hpp"
#include "slipstokes/errors.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace slipstokes {

/// Process exit codes of the command-line runner.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitInternal = 4,
};

struct RunOutcome {
  nlohmann::json summary;
  /// Hash of the summary with the timestamps field removed.
  std::string summary_hash;
  bool passed = false;
  std::vector<std::string> artifacts;

  int exit_code() const { return passed ? kExitSuccess : kExitNumeric; }
};

/// Runs the configured experiment and writes summary.json plus the selected
/// artifacts into config.out_dir. Module errors propagate as Error.
RunOutcome run_experiment(const RunConfig& config);

/// Name, description and required keys of each experiment, in fixed order.
nlohmann::json list_experiments();

std::string summary_hash(const nlohmann::json& summary);

int exit_code_for(ErrorKind kind);

/// {"error": {"kind", "message"}} for failed runs.
nlohmann::json error_report(ErrorKind kind, const std::string& message);

}  // namespace slipstokes
