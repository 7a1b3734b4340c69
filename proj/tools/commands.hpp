#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aeromap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitAllRejected = 2;

/// Parses `args` (args[0] is the program name) and runs the subcommand.
/// Fatal errors print one diagnostic line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aeromap::cli
