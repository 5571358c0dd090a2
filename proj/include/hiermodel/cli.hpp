#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hiermodel::cli {

enum ExitCode : int {
    ok = 0,
    model_error = 2,
    no_convergence = 3,
    usage_error = 64,
};

/// Runs one verb. args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string usage();

}  // namespace hiermodel::cli
