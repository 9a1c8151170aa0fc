#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bohm/app/runs.hpp"

namespace app = bohm::app;

int main(int argc, char** argv) {
  CLI::App cli{"Bohmian trajectories, vortices and chaos in a 2D anharmonic oscillator"};
  cli.require_subcommand(1);

  app::RunOptions options;
  std::string config;
  std::string preset;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration file");
    sub->add_option("--preset", preset, "Built-in preset (base, fig1, fig2, fig3, fig4L, fig4R)");
    sub->add_option("--out", options.out, "Output directory")->default_val(".");
    sub->add_option("--jobs", options.jobs, "Sweep points run in parallel")->default_val(1);
    sub->add_option("--set", options.overrides, "Override, section.key=value (repeatable)");
  };

  const std::pair<app::Command, const char*> commands[] = {
      {app::Command::evolve, "Integrate the Schroedinger equation and store snapshots"},
      {app::Command::traj, "Integrate Bohmian trajectories from seeds"},
      {app::Command::vortex, "Detect and track nodal points"},
      {app::Command::chaos, "Mean log phase-space separation of trajectory pairs"},
      {app::Command::plot, "Render SVG figures from run outputs"},
  };
  app::Command chosen = app::Command::evolve;
  for (const auto& [command, help] : commands) {
    auto* sub = cli.add_subcommand(app::command_name(command), help);
    add_common(sub);
    sub->callback([&chosen, command] { chosen = command; });
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : app::kExitConfig;
  }
  if (!config.empty()) options.config = config;
  if (!preset.empty()) options.preset = preset;
  return app::run(chosen, options, std::cerr);
}
