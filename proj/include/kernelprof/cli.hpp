#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kprof {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitEnvironment = 2 };

/// Runs the kernelprof command line (arguments without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kprof
