#pragma once

namespace rnnlab {

// Entry point of the rnnlab command-line tool, factored out so tests can
// drive it in-process. Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace rnnlab
