#pragma once

namespace rcsb::cli {

// Parses argv and runs one mode (train, infer, eval, gen-contours,
// param-count, dump-weight-maps). Returns the process exit code:
// 0 success, 1 validation/usage error, 2 runtime failure.
int dispatch(int argc, const char* const* argv);

}  // namespace rcsb::cli
