#pragma once

#include <string>
#include <vector>

namespace awe {

// Command-line entry point. Exit code 0 on success, 1 on runtime error,
// 2 on usage error.
int cli_main(int argc, const char* const* argv);

// Convenience wrapper for in-process invocation; args excludes argv[0].
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace awe
