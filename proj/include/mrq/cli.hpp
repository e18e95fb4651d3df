#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mrq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs `mrq <subcommand> [flags...]`. `args` excludes the program name.
/// Results go to files named by --out, or to `out` when absent.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mrq::cli
