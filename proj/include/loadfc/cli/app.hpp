#pragma once

#include <iosfwd>

namespace loadfc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // data, model or I/O error
inline constexpr int kExitUsage = 2;    // bad flags, subcommand or config

// Entry point of the `loadfc` tool. Errors are reported on `err` as one line,
// `loadfc: error[<kind>]: <message>`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace loadfc::cli
