#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "finlab/experiments.hpp"
#include "run_config.hpp"

namespace finlab::cli {

/// One `finlab run <name>` experiment: the keys it accepts and how to run it.
struct Command {
  std::string name;
  std::string summary;
  std::set<std::string> keys;
  std::function<ConvergenceReport(const RunConfig&)> run;
};

const std::vector<Command>& commands();
/// nullptr when there is no such experiment.
const Command* find_command(const std::string& name);

/// Keys every experiment accepts: output, svg, threads.
const std::set<std::string>& output_keys();

/// Union of all keys, for registering command-line flags.
std::set<std::string> all_keys();

}  // namespace finlab::cli
