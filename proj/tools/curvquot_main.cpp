#include "curvquot/runner.hpp"

#include "CLI11.hpp"

#include <cstdint>

int main(int argc, char** argv) {
  CLI::App app{"prescribed curvature-quotient solver on the round sphere"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand(
      "run", "solve one configuration and write report files");
  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  int resolution = 0;
  run->add_option("config", config_path, "JSON configuration file")
      ->required();
  run->add_option("--out", out_dir, "output directory (default: .)");
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override the config seed");
  CLI::Option* res_opt = run->add_option(
      "--resolution", resolution,
      "override grid resolution (axisymmetric M; full2d M x 2M)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad invocation counts as a configuration error
  }

  curvquot::runner::RunOptions opts;
  opts.config_path = config_path;
  opts.out_dir = out_dir;
  if (seed_opt->count() > 0) opts.seed = seed;
  if (res_opt->count() > 0) opts.resolution = resolution;
  return curvquot::runner::run(opts);
}
