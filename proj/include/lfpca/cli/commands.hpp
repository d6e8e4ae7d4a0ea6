#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfpca::cli {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitValidation = 2,
  kExitIdentifiability = 3,
  kExitNumerical = 4,
};

// Runs `lfpca <args...>` (args exclude the program name). Normal output goes
// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lfpca::cli
