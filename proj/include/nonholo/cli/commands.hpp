#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nonholo::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalFailure = 3 };

/// Entry point of the `nonholo` tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nonholo::cli
