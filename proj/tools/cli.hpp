#pragma once

#include <iosfwd>

namespace penal::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kNumerical = 3,
  kCheckFailed = 4,
};

/// Entry point shared by the executable and the smoke tests.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace penal::cli
