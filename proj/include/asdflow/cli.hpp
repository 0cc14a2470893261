#pragma once

namespace asdflow {

/// Command-line entry point; returns the process exit code
/// (0 success, 1 input error, 2 non-convergence / failed verification).
int run_cli(int argc, const char* const* argv);

}  // namespace asdflow
