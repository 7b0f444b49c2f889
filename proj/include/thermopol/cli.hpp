#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thermopol {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs the thermopol command line. args excludes the program name.
/// Subcommands: simulate, calibrate, reconstruct, estimate, evaluate, curve.
/// Returns 0 on success, 1 on usage errors, 2 on data errors.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thermopol
