#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace semtopo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv-style arguments (without the program name) and runs the
/// selected subcommand. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs a command from its resolved parameter snapshot and writes the
/// manifest. This is what `replay` calls.
void execute(const std::string& command, const nlohmann::json& params, std::ostream& out);

}  // namespace semtopo::cli
