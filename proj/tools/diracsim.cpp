// diracsim: experiment driver for the disordered 1D Dirac operator.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dirac/cli/commands.hpp"
#include "dirac/cli/config.hpp"
#include "dirac/cli/output.hpp"
#include "dirac/errors.hpp"

namespace {

constexpr int exit_ok = 0, exit_config = 2, exit_numerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace dirac::cli;
  CLI::App app{"Numerical experiments for the 1D Dirac operator with decaying random potential"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  int threads = 1;
  bool dump_config = false;

  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file (defaults used when omitted)");
    sub->add_option("--seed", seed, "base seed, overrides seeds.base");
    sub->add_option("--out", out_dir, "output directory, overrides output.dir");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", format, "csv, svg or both")->check(CLI::IsMember({"csv", "svg", "both"}));
    sub->add_flag("--print-config", dump_config, "print the effective config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = config_path.empty() ? ExperimentConfig::defaults() : load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << (config_path.empty() ? std::string() : config_path + ":") << e.what() << "\n";
    return exit_config;
  }
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.out_dir = *out_dir;
  if (format) cfg.format = *format == "csv" ? Format::csv : *format == "svg" ? Format::svg : Format::both;

  if (dump_config) {
    std::cout << to_json_text(cfg);
    return exit_ok;
  }
  try {
    for (const auto& f : run_command(command, cfg, threads)) std::cout << f << "\n";
  } catch (const ConfigError& e) {
    std::cerr << (config_path.empty() ? std::string() : config_path + ":") << e.what() << "\n";
    return exit_config;
  } catch (const dirac::Error& e) {
    std::cerr << "numerical failure (" << dirac::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numerical;
  }
  return exit_ok;
}
