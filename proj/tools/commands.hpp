#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace segaug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

// Parses argv-style arguments (without the program name), runs the selected
// subcommand and returns the process exit code. Diagnostics go to `err`, results
// and tables to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segaug::cli
