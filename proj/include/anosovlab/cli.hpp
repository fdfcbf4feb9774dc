#pragma once

// Command-line front end. Exit status: 0 pass, 1 certificate or property
// failure, 2 usage or configuration error.

#include <ostream>

namespace anosovlab::cli {

enum Exit : int { kPass = 0, kFail = 1, kUsage = 2 };

/// Parses argv, runs one subcommand and writes its artifacts below --out.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace anosovlab::cli
