#pragma once

#include <ostream>

namespace rentcast::cli {

/// Exit codes: 0 success, 1 pipeline failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs the selected pipeline stage.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rentcast::cli
