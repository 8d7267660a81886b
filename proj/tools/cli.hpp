#pragma once

#include <iosfwd>

namespace guti::cli {

enum ExitCode { kOk = 0, kUserError = 1, kInternalError = 2 };

/// Entry point of the `guti` tool with injectable streams, so tests can run
/// subcommands in-process.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace guti::cli
