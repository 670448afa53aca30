#pragma once

#include <string>
#include <vector>

namespace zsreg::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // pipeline or training error
inline constexpr int kExitUsage = 2;    // bad flags or unreadable inputs

int run(int argc, char** argv);
int run(const std::vector<std::string>& args);  // args exclude the program name

}  // namespace zsreg::cli
