#pragma once

namespace p2c {

// The whole command-line surface, callable in-process so tests can drive it
// without spawning. Returns the process exit code; failures print one
// "error: <category>: <message>" line to stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace p2c
