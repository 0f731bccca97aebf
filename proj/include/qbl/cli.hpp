#pragma once

namespace qbl {

// Full command-line surface. Exit codes: 0 success, 1 usage/config error,
// 2 verification failure, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace qbl
