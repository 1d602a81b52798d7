#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace styleinv {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitCheckpoint = 3,
  kExitNumeric = 4,
};

/// Runs one subcommand; args excludes the program name. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace styleinv
