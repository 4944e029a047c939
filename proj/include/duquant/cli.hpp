#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace duquant::cli {

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kUsage = 2,
  kIo = 3,
};

// Runs the duquant command line. args excludes the program name. Normal
// output goes to out, diagnostics to err. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace duquant::cli
