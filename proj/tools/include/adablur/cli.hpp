#pragma once

#include <ostream>

namespace adablur {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitIo = 3,
  kExitFormat = 4,
  kExitShape = 5,
};

// Runs one subcommand (synth, train, degrade, eval, sweep, kernel-dump).
// Human-readable output and the final "RESULT key=value ..." line go to
// `out`; diagnostics go to `err`. Returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adablur
