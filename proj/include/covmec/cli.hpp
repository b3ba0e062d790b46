// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace covmec {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitParse = 3,
    kExitInfeasible = 4,
    kExitSolver = 5,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "COVMEC_OUTPUT_DIR";

/// Runs one command line (args[0] is the program name) and returns its exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace covmec
