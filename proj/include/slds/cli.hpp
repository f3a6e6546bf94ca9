#pragma once

#include <iosfwd>

namespace slds {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `slds` command (subcommands synth, segment, eval).
/// Returns the process exit code: 0 success, 2 usage or validation error,
/// 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slds
