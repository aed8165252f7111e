#pragma once

#include <iosfwd>

namespace pass::cli {

// Exit codes shared by every subcommand.
enum Exit : int { Ok = 0, Usage = 1, Input = 2, Numeric = 3 };

/// Parses argv and runs one subcommand. Results and usage text go to `out`,
/// progress, the resolved configuration and errors go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pass::cli
