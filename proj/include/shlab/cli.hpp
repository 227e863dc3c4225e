#pragma once

namespace shlab {

// Command-line entry point. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure, 4 budget exceeded (partial sweep results on disk).
int run_cli(int argc, const char* const* argv);

}  // namespace shlab
