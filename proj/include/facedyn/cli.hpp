#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace facedyn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `facedyn` tool. `args` excludes the program name.
// Returns 0 on success, 1 when a stage fails, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace facedyn
