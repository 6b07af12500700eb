#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ood::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitSchema = 2;

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// `err`; data goes to files or `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ood::cli
