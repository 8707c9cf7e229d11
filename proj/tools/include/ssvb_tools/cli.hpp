#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ssvb::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kNotConverged = 2,
  kUsage = 64,
};

// Runs the ssvb command line with argv[0] excluded. Normal output goes to
// `out`, diagnostics and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssvb::cli
