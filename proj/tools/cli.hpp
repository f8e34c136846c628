#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rugwatch::cli {

/// Runs one `rugwatch` invocation; `args` excludes the program name.
/// Returns 0 on success, 1 on a pipeline error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rugwatch::cli
