#pragma once

#include <map>
#include <string>

namespace dtr {

// Entry point behind the command-line binary. Subcommands: simulate, train,
// evaluate, benchmark, consistency, report. Exit codes: 0 success, 2 usage
// error, 3 runtime failure.
int cli_main(int argc, const char* const* argv);

// Flat key=value configuration file ('#' comments, blank lines ignored).
std::map<std::string, std::string> parse_config(const std::string& path);

}  // namespace dtr
