#pragma once

#include <ostream>

namespace defnet::cli {

/// Runs the command line and returns the process exit code:
/// 0 success, 1 invalid input, 2 inconsistent or unreadable input,
/// 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace defnet::cli
