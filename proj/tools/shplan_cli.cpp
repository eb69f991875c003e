// shplan: closed-loop runs, scenario validation and the gap comparison table.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shplan/scenario_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spherical-harmonic free-space planner"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  bool surface_dumps = false, create_out = false;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run a scenario in closed loop and write trajectory/summary files");
  run->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_flag("--surface-dumps", surface_dumps, "Write the fitted surface on a probe grid for every step");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_flag("--create", create_out, "Create the output directory if it does not exist");

  double agent_radius = 1.0, margin = 0.0;
  std::vector<double> widths;
  std::string gap_out;
  auto* gap = app.add_subcommand("gap-report", "Tabulate the gap needed to pass between two boxes");
  gap->add_option("--agent-radius", agent_radius, "Agent radius [m]")->required();
  gap->add_option("--widths", widths, "Obstacle widths [m]")->required()->delimiter(',');
  gap->add_option("--out", gap_out, "Output CSV file")->required();
  gap->add_option("--margin", margin, "Extra clearance of the harmonic planner [m]");

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "Parse and validate a scenario file");
  val->add_option("scenario", validate_path, "Scenario file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : shplan::kExitUsage;
  }

  if (run->parsed()) {
    shplan::RunFlags flags;
    flags.surface_dumps = surface_dumps;
    flags.seed = seed;
    flags.create_out = create_out;
    const int rc = shplan::run_command(scenario_path, out_dir, flags, std::cerr);
    std::cout << "exit " << rc << "\n";
    return rc;
  }
  if (gap->parsed()) return shplan::report_gap_comparison(agent_radius, widths, gap_out, margin, std::cerr);
  if (val->parsed()) return shplan::validate_command(validate_path, std::cout, std::cerr);
  return shplan::kExitUsage;
}
