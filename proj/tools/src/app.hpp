#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dcrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (program name first). Returns the exit code:
/// 0 ok, 1 runtime failure, 2 usage or configuration error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dcrec::cli
