#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pca::cli {

enum ExitCode : int {
  kOk = 0,
  kInadmissible = 2,
  kVerificationFailed = 3,
  kResourceCap = 4,
  kUsage = 64,
};

/// Runs one command line (args[0] is the program name). Reports go to
/// `out` unless --out names a file; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace pca::cli
