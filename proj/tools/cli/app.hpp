#pragma once

#include <ostream>

namespace stogeo::cli {

// Parses argv, dispatches the subcommand and maps errors to exit codes:
//   0 success, 1 failed verification, 2 usage/config error,
//   3 infeasible request, 4 numerical failure (e.g. nonconvergence).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stogeo::cli
