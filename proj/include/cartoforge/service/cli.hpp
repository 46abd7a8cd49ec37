#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cartoforge::service {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one command line (args[0] is the program name). Results go to `out`;
/// diagnostics and usage text go to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cartoforge::service
