#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace invit {

inline constexpr const char* kToolVersion = "invit 1.0.0";

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,        // bad arguments, input files or problem/mesh mismatch
  kExitNotConverged = 3, // solve hit --max-steps
  kExitSolver = 4,       // linear solver or profile update failed
};

/// Runs the `invit` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace invit
