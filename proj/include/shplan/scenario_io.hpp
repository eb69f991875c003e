#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shplan/sim.hpp"

namespace shplan {

inline constexpr int kFormatVersion = 1;

/// Process exit codes for the command-line verbs.
enum ExitCode : int {
  kExitReachedGoal = 0,
  kExitUsage = 1,
  kExitTimeout = 2,
  kExitCollision = 3,
  kExitPlannerFailure = 4,
  kExitConfigError = 5,
  kExitIoError = 6,
};

int exit_code_for(Outcome outcome);

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { Parse, Validation, Io };
  ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// JSON scenario text. Omitted optional fields take the Scenario defaults.
Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& scenario);

struct RunSummary {
  Outcome outcome = Outcome::Timeout;
  int steps = 0;
  double path_length = 0.0;
  double min_clearance = 0.0;
  double step_ms_p50 = 0.0;  // estimate + plan
  double step_ms_p90 = 0.0;
  double step_ms_max = 0.0;
  int first_plan_iterations = 0;
  double warm_plan_iterations_median = 0.0;
};

RunSummary summarize(const TrajectoryLog& log);

/// Column names of the trajectory table, in order.
const std::vector<std::string>& trajectory_columns();

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log);
void write_surface_dump(const std::filesystem::path& path, const FreeSpaceEstimate& est,
                        const Directions& probe);
void write_summary_json(const std::filesystem::path& path, const RunSummary& summary);

struct RunFlags {
  bool surface_dumps = false;
  std::optional<std::uint64_t> seed;
  bool create_out = false;
  int probe_count = 1000;
};

/// Runs a scenario file end to end and writes trajectory.csv, summary.json and
/// (optionally) surfaces/surface_NNNN.csv into out_dir.
int run_command(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir,
                const RunFlags& flags, std::ostream& err);

/// Required gap of the ellipsoid-bounded baseline (2D and 3D) next to the
/// harmonic planner's 2 r_a + margin, one row per obstacle width.
int report_gap_comparison(double r_a, const std::vector<double>& widths, const std::filesystem::path& out,
                          double margin, std::ostream& err);

int validate_command(const std::filesystem::path& scenario_path, std::ostream& out, std::ostream& err);

}  // namespace shplan
