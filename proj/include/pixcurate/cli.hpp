#pragma once

#include <iosfwd>

namespace pixcurate {

// Exit codes: 0 success, 1 validation error or bad usage, 2 I/O or endpoint
// failure. Data goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pixcurate
