#pragma once

// Subcommand implementations. Each returns the process exit status and
// writes its artifacts under the configured output directory; messages go
// to `log`. Errors from the core library propagate as exceptions and are
// mapped to exit codes by run_cli().

#include <ostream>

#include "cli/io.hpp"
#include "cli/options.hpp"

namespace stogeo::cli {

int cmd_simulate(const SimulateOptions& opt, std::ostream& log);
int cmd_ensemble(const EnsembleOptions& opt, std::ostream& log);
int cmd_plan(const PlanOptions& opt, std::ostream& log);

// Flat key/value form of each option set; written as run.cfg and run.json
// and accepted back through --config.
Json config_json(const SimulateOptions& opt);
Json config_json(const EnsembleOptions& opt);
Json config_json(const PlanOptions& opt);

void write_run_config(const std::filesystem::path& dir, std::string_view command,
                      const Json& flat);

}  // namespace stogeo::cli
