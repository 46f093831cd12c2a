#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pottsmix::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsage = 2, kIngestion = 3, kNumerical = 4 };

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pottsmix::cli
