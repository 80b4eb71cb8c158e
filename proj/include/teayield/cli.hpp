#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace teayield::cli {

/// Exit codes: 0 success, 1 user or data error, 2 internal error.
int run(int argc, char** argv);
/// args[0] is the program name. Data goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace teayield::cli
