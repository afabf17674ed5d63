#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace fbq::cli {

// Runs the command line (without the program name). Data goes to `out`,
// diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parses the `# key=value` lines at the top of an output file. The "command"
// entry names the subcommand.
std::map<std::string, std::string> read_header(std::istream& in);

// Rebuilds an argument list from a parsed header.
std::vector<std::string> rerun_args(const std::map<std::string, std::string>& header);

}  // namespace fbq::cli
