#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ivf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitReject = 2;
inline constexpr int kExitError = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitIo = 74;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Help text of the program (empty path) or of a subcommand path such as
/// {"graph", "check"}.
std::string help(const std::vector<std::string>& path = {});

/// Every subcommand path, depth first, starting with the program itself.
std::vector<std::vector<std::string>> command_paths();

} // namespace ivf::cli
