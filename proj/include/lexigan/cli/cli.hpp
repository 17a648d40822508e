#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lexigan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFault = 3;

/// Parses and runs one subcommand (train, generate, probe, selftest). Log
/// lines go to `log`; the first one is the resolved configuration.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace lexigan::cli
