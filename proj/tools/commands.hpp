#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace supertask::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Runs one command line (without the program name). Output files go under
/// $SUPERTASK_OUT (default "out") unless a command is given --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace supertask::cli
