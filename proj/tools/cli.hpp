#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace focusdd::cli {

/// Exit codes: 0 success, 1 validation error (flags, config), 2 runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one invocation. `args` excludes the program name. Machine output goes to `out`
/// when a command is asked to write to "-"; diagnostics always go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace focusdd::cli
