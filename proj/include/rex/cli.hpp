// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rex::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kIo = 3,
  kValidation = 4,
  kInternal = 5,
};

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// unless the command was given --out; failures write a single JSON line
/// {"error": kind, "code": n, "message": text} to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rex::cli
