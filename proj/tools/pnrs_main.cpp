#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pnrs/config.hpp"
#include "pnrs/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"semilinear waves on the compactified cylinder: forward solves, "
               "scattering, interaction, and source recovery"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  for (const auto& name : pnrs::command_list()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key = value experiment file");
    sub->add_option("--out", out_dir, "output directory (PNRS_OUT_ROOT prefixes relative paths)");
    sub->add_option("--seed", seed, "random seed, overrides the config");
    sub->add_option("--threads", threads, "parallelism degree, overrides PNRS_THREADS");
  }
  CLI11_PARSE(app, argc, argv);
  auto* sub = app.get_subcommands().front();

  try {
    pnrs::RunConfig cfg;
    if (sub->count("--config")) cfg = pnrs::parse_config_file(config_path);
    if (sub->count("--out")) cfg.out_dir = out_dir;
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--threads")) cfg.threads = threads;
    return pnrs::run_command(sub->get_name(), cfg);
  } catch (const pnrs::ConfigError& e) {
    std::cerr << (sub->count("--config") ? config_path : std::string("<config>")) << ":" << e.line
              << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
