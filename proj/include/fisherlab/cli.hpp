#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fisherlab {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitFailure = 3 };

/// Entry point of the `fisherlab` tool. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace fisherlab
