#pragma once

#include <iosfwd>

namespace earthvox::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitEmpty = 2;

/// Runs the command line in-process. Results go to `out`, logs and errors
/// to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace earthvox::cli
