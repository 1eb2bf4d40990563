#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecmatch::cli {

// Runs the command-line tool. `args` excludes the program name. Output and
// error text go to the supplied streams. Returns the process exit code:
// 0 success, 2 validation error, 3 numerical failure, 4 infeasible matching.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ecmatch::cli
