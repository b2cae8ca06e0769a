#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dare::tools {

enum ExitCode : int { kOk = 0, kUsage = 2, kDomain = 3 };

/// Runs one `dare` invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dare::tools
