#include <iostream>

#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace robin::cli;
  CLI::App app{"Reconstruct a perturbed Robin boundary from Cauchy data"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string emit;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "Noise seed (overrides experiment.seed)");
    sub->add_option("--emit", emit, "Artifacts to write: any of csv,json,svg");
  };
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  add_common(run);
  CLI::App* table = app.add_subcommand("table", "Run a sweep of (gamma, delta) rows");
  add_common(table);
  table->add_option("--jobs", jobs, "Concurrent experiments")->check(CLI::PositiveNumber);
  CLI::App* validate = app.add_subcommand("validate", "Run the built-in property checks");

  CLI11_PARSE(app, argc, argv);

  Overrides overrides;
  try {
    if (!out_dir.empty()) overrides.out_dir = out_dir;
    if (app.got_subcommand(run) ? run->count("--seed") > 0 : table->count("--seed") > 0) overrides.seed = seed;
    if (!emit.empty()) overrides.emit = parse_emit(emit);
  } catch (const std::exception& e) {
    std::cerr << "[config] " << e.what() << "\n";
    return 2;
  }

  if (app.got_subcommand(validate)) return cmd_validate(std::cout, std::cerr);
  if (app.got_subcommand(table)) return cmd_table(config, overrides, jobs, std::cout, std::cerr);
  return cmd_run(config, overrides, std::cout, std::cerr);
}
