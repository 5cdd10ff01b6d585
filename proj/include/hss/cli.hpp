#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hss {

// Command-line entry: run, compare, sweep, gen-trace, merge. `args` excludes
// the program name. Returns the process exit code; any failure writes one
// `error: ...` line to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hss
