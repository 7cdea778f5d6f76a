#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace consensus_fdi::cli {

/// Name of the environment variable that overrides the output directory.
/// --out still takes precedence over it.
inline constexpr const char* kOutDirEnv = "CFDI_OUT_DIR";

/// Runs the command line `args` (without the program name). Returns the
/// process exit status: 0 on success, 1 on invalid input, 2 on runtime
/// failure.
int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace consensus_fdi::cli
