#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace entrocert::cli {

enum ExitCode : int {
  kCertified = 0,
  kNotCertified = 1,
  kPreconditionsFailed = 2,
  kInputError = 3,
};

/// Runs the command line `args` (without the program name). Human-readable
/// output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace entrocert::cli
