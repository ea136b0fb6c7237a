#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sgacs {

// Exit codes: 0 success, 1 validation failure, 2 numerical failure.
// Always ends stdout with `RESULT <subcommand> <pass|fail> <elapsed_ms>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sgacs
