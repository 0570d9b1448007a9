#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trajprune::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;  // validation or configuration
inline constexpr int kIoError = 2;

// Entry point for the `trajprune` tool. Subcommands: prune, stats, compare,
// gen, filter. `in` feeds `filter`; human-readable output goes to `out`,
// diagnostics to `err`.
int Run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err);

// Convenience overload; args excludes the program name.
int Run(const std::vector<std::string>& args, std::istream& in,
        std::ostream& out, std::ostream& err);

}  // namespace trajprune::cli
