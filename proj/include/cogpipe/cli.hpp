#pragma once

#include <string>
#include <vector>

namespace cogpipe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

// Runs the command line `args` (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args);

}  // namespace cogpipe::cli
