#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "shplan/box.hpp"
#include "shplan/dynamics.hpp"
#include "shplan/freespace.hpp"
#include "shplan/geometry.hpp"
#include "shplan/planner.hpp"

namespace shplan {

struct SensorParams {
  int ray_count = 1000;
  double max_range = 20.0;
  double noise_std = 0.0;
  double eps_r = 0.05;
};

/// How measured points are turned into hard radius constraints.
/// Radial: each return pulled in by r_a. Swept: per sensor direction, the free
/// travel of the agent sphere against all returns.
/// Swept erosion also grows each return's radius by ray_spread(ray_count)
/// times its range.
enum class ErosionMode { Radial, Swept };

/// Half the mean angular spacing of a ray_count Fibonacci scan [rad].
double ray_spread(int ray_count);
std::string_view to_string(ErosionMode m);

struct Scenario {
  AgentState start;
  Vec3 goal = Vec3::Zero();
  double agent_radius = 0.5;
  std::vector<BoxObstacle> obstacles;
  SensorParams sensor;
  ErosionMode erosion = ErosionMode::Swept;
  EstimationParams estimation;
  PlannerParams planner;
  DynamicsParams dynamics;
  int max_steps = 300;
  double goal_tolerance = 0.25;
  std::uint64_t seed = 1;
  /// Consecutive infeasible plans tolerated (braking each time) before giving up.
  int brake_budget = 5;
};

/// Throws std::invalid_argument naming the first violated field.
void validate(const Scenario& scenario);

/// Largest commanded speed along any body axis combination.
double max_speed(const PlannerParams& params);

/// ROI radius for a scenario: max speed times horizon plus agent radius.
double scenario_roi(const Scenario& scenario);

/// Ray-cast scan from the agent position along Fibonacci directions. Returned
/// points are agent-centered; misses produce no point.
PointCloud simulate_scan(const AgentState& state, std::span<const BoxObstacle> obstacles,
                         const SensorParams& sensor, std::mt19937_64* rng = nullptr);

/// Scan -> ROI clamp -> erosion for one sensing step (agent-centered output).
PointCloud preprocess_scan(const PointCloud& raw, const Scenario& scenario);

/// Distance to the nearest box surface (negative inside) minus r_a; +inf with no boxes.
double ground_truth_clearance(const Vec3& p, std::span<const BoxObstacle> obstacles, double r_a);

/// Gap needed between two boxes of width w_b once each is replaced by its
/// bounding ellipsoid (dims = 2) or ellipsoid (dims = 3).
double required_gap(double r_a, double w_b, int dims);

enum class Outcome { ReachedGoal, Timeout, Collision, PlannerFailure };
std::string_view to_string(Outcome o);

struct PhaseTimes {
  double scan_ms = 0.0;
  double estimate_ms = 0.0;
  double plan_ms = 0.0;
};

struct StepRecord {
  int step = 0;
  double time = 0.0;         // time at the start of the step [s]
  AgentState state;          // state before applying the input
  ControlInput applied;
  Eigen::VectorXd weights;
  PhaseTimes times;
  double min_clearance = 0.0;  // ground truth along the applied step
  int returned_points = 0;
  SolveDiagnostics estimation;
  PlannerDiagnostics planner;
  bool braked = false;
};

struct TrajectoryLog {
  std::vector<StepRecord> steps;
  AgentState final_state;
  Outcome outcome = Outcome::Timeout;
};

struct RunOptions {
  /// Called after each step with the estimate used in it (e.g. surface dumps).
  std::function<void(const StepRecord&, const FreeSpaceEstimate&)> on_step;
};

TrajectoryLog run_closed_loop(const Scenario& scenario, const RunOptions& options = {});

/// Two boxes of width w_b straddling the x axis with a narrow gap, start
/// offset in y, goal beyond the boxes.
Scenario canonical_corridor_scenario();

}  // namespace shplan
