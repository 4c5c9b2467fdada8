#pragma once

#include <iosfwd>

namespace netrecon {

// Full command-line front end with injected streams so tests can drive it
// in-process. Returns the process exit code: 0 success, 2 when inference hit
// the iteration limit without converging, 1 on any error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace netrecon
