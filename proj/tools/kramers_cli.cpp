#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Exit problems for ODEs with small Levy noise"};
  app.require_subcommand(1);
  kramers::cli::Invocation inv;
  std::uint64_t seed = 0;
  int workers = 1;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Simulate trajectories and dump them"},
      {"sample-measure", "Draw jump marks from the measure"},
      {"quasipotential", "Barrier height or V(x, z) with a certificate"},
      {"exit-stats", "Monte Carlo first-exit statistics"},
      {"kramers", "Exit-time law against the barrier height"},
      {"cycle-diag", "Cycle decomposition diagnostic"},
      {"is-exit", "Importance-sampled exit probability"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", inv.config_path, "Experiment config file")->required();
    sub->add_option("--seed", seed, "Master seed (overrides run.seed)");
    sub->add_option("--workers", workers, "Worker threads (results do not depend on it)");
    sub->add_option("--out", inv.out_dir, "Output directory");
    sub->add_flag("--strict", inv.strict, "Exit with status 4 when a report is flagged");
    sub->callback([&inv, &seed, &workers, sub, name = name] {
      inv.command = name;
      if (sub->count("--seed")) inv.seed = seed;
      if (sub->count("--workers")) inv.workers = workers;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kramers::cli::kConfigError;
  }
  return kramers::cli::run(inv);
}
