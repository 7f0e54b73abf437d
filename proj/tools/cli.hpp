#pragma once

#include <iosfwd>

namespace piscan::cli {

// Runs the piscan command line. Data goes to `out` (or files), diagnostics
// to `err`. Returns 0 on success, 1 on operational failure, 2 on usage error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace piscan::cli
