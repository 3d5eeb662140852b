#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace csi::cli {

enum ExitCode : int {
  kOk = 0,
  kArgumentError = 2,
  kFormatError = 3,
  kNumericalFailure = 4,
};

/// Runs one command line (without the program name). Successful runs append a
/// JSON-lines record to the manifest so they can be replayed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace csi::cli
