#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cptgen::cli {

enum ExitCode : int { kOk = 0, kInputFailure = 1, kNumericalFailure = 2 };

/// Runs one command line (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cptgen::cli
