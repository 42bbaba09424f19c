#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace specfid::cli {

/// Runs one command line (without the program name) and returns the exit
/// code: 0 success, 1 usage error, 2 data error, 3 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specfid::cli
