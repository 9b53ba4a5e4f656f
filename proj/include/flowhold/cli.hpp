#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace flowhold {

/// Runs one command line (without the program name). Returns the process
/// exit status: 0 success, 1 runtime failure, 2 usage/config/parse error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flowhold
