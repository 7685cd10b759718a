#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace neutrality::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kTestUndefined = 2 };

/// Runs the command line `args` (args[0] is the program name). Everything the
/// tool prints goes to `out` / `err`, so tests can drive it in-process.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Table 1 walkthrough printed by the demo subcommand.
std::string demo_text();

}  // namespace neutrality::cli
