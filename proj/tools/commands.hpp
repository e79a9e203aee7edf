#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace symfield::cli {

/// Runs one `symfield` invocation; args excludes the program name.
/// Returns the process exit code: 0 success, 2 validation error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace symfield::cli
