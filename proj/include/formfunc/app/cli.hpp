#pragma once

#include <iosfwd>

namespace formfunc::cli {

/// Runs the formfunc command line. Returns 0 on success, 1 when the command
/// fails on its inputs, 2 on a malformed command line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace formfunc::cli
