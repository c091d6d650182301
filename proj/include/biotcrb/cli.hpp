#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace biotcrb {

// Whole CLI as a callable, so tests drive it in-process. args excludes the
// program name. Returns the process exit code: 0 ok, 2 config error,
// 3 numeric/degenerate error, 4 resource cap exceeded.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace biotcrb
