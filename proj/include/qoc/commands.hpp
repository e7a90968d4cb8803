#pragma once

// Command-line front end. Exit codes: 0 ok, 2 configuration (missing or
// unparsable input), 3 invariant violation or failed verification,
// 4 uncontrollable system, 5 no convergence (the best iterate is still
// written).

#include "qoc/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qoc::cli {

enum ExitCode { Ok = 0, Config = 2, Invariant = 3, Uncontrollable = 4, Unconverged = 5 };

int exit_code(ErrorCode code);

/// Parses `args` (without the program name) and runs the subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qoc::cli
