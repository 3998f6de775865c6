#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "nfpe/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Fokker-Planck numerics lab"};
  app.require_subcommand(1);

  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
  app.add_option("--seed", seed, "Random seed (overrides the config seed)");
  app.add_option("--threads", threads, "Worker threads (default: NFPE_THREADS or 1)");

  std::string config;
  auto* solve = app.add_subcommand("solve", "Evolve the PDE from a config");
  solve->add_option("config", config, "Config file")->required();
  auto* particles = app.add_subcommand("particles", "Run the particle system from a config");
  particles->add_option("config", config, "Config file")->required();
  auto* kernels = app.add_subcommand("kernels", "Report kernel constants and hypothesis checks");
  kernels->add_option("config", config, "Config file")->required();
  app.add_subcommand("validate", "Run the oracle battery");

  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--threads", threads, "Worker threads");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nfpe::kExitConfig;
  }

  nfpe::RunOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (app.count("--seed") || app.get_subcommands().front()->count("--seed")) opts.seed = seed;
  opts.threads = nfpe::resolve_threads(threads);

  const std::string cmd = app.get_subcommands().front()->get_name();
  return nfpe::guarded([&] {
    if (cmd == "validate") return nfpe::cmd_validate(opts);
    const nfpe::RunConfig cfg = nfpe::load_run_config(config);
    if (cmd == "solve") return nfpe::cmd_solve(cfg, opts);
    if (cmd == "particles") return nfpe::cmd_particles(cfg, opts);
    return nfpe::cmd_kernels(cfg, opts);
  });
}
