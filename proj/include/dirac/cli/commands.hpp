#pragma once

#include <map>
#include <string>
#include <vector>

#include "dirac/cli/config.hpp"

namespace dirac::cli {

const std::vector<std::string>& command_names();

// File name -> content for one subcommand; nothing touches the disk.
// Throws ConfigError for configs the command cannot accept and dirac::Error on numerical failure.
std::map<std::string, std::string> render_command(const std::string& name, const ExperimentConfig& config,
                                                  int threads = 1);

// Renders and writes into config.out_dir; returns the written paths.
std::vector<std::string> run_command(const std::string& name, const ExperimentConfig& config, int threads = 1);

}  // namespace dirac::cli
