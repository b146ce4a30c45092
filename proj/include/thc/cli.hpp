#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace thc {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of cli_main.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

/// Command-line entry point. args[0] is the program name. Subcommands:
/// simulate, twin, pullback, ou-check, constants, cocycle-check.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace thc
