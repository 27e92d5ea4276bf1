#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rss {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
};

// Entry point shared by the `rss` binary and the tests. `args` excludes the
// program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rss
