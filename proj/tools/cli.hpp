#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace irf::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Runs one command line (args[0] is the program name). Regular output goes
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irf::cli
