#pragma once

#include "pgsim/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pgsim {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitVerification = 4,
};

/// Config errors (bad input, infeasible targets) map to 2, numerical failures to 3.
int exit_code_for(ErrorCode code);

/// Runs one subcommand: simulate, ctf, fit, verify or plan. args[0] is the
/// program name. Summaries go to `out`; failures are one "code: message" line on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pgsim
