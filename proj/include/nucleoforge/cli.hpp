#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nucleoforge/errors.hpp"

namespace nucleoforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;  // also malformed input files
inline constexpr int kExitIo = 3;
inline constexpr int kExitPlacement = 4;
inline constexpr int kExitPrecondition = 5;
inline constexpr int kExitInternal = 1;

int exit_code(ErrorKind kind);

/// Runs one command line (args excludes the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nucleoforge::cli
