#pragma once

#include <string>
#include <vector>

namespace topicident {

/// Entry point behind the `topicident` binary. Subcommands: identify, table1,
/// rates, two-point, bounds, mle, simulate. Returns 0 on success, 1 on
/// validation errors, 2 on runtime guard failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace topicident
