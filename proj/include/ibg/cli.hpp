#pragma once

namespace ibg {

// Entry point shared by the binary and the tests.
// Exit codes: 0 success, 2 input validation, 3 numerical failure, 4 I/O.
int run_cli(int argc, const char* const* argv);

}  // namespace ibg
