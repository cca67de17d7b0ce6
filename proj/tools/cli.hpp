#pragma once

#include <ostream>

namespace skullstrip::cli {

/// Runs the command line. Exit codes: 0 success, 1 runtime or pipeline
/// failure, 2 usage or validation error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skullstrip::cli
