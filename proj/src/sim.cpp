#include "shplan/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "shplan/kernels.hpp"

namespace shplan {

std::optional<double> ray_box_intersect(const Vec3& origin, const Vec3& dir, const BoxObstacle& box) {
  const Vec3 lo = box.center - box.half_extents;
  const Vec3 hi = box.center + box.half_extents;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    double t0 = (lo[a] - origin[a]) / dir[a];
    double t1 = (hi[a] - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_far < 0.0) return std::nullopt;
  return std::max(t_near, 0.0);
}

double box_signed_distance(const Vec3& p, const BoxObstacle& box) {
  const Vec3 q = (p - box.center).cwiseAbs() - box.half_extents;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

void validate(const Scenario& s) {
  auto fail = [](const std::string& field, const std::string& what) {
    throw std::invalid_argument(field + ": " + what);
  };
  if (!to_vector(s.start).allFinite()) fail("start", "must be finite");
  if (!s.goal.allFinite()) fail("goal", "must be finite");
  if (!(s.agent_radius >= 0.0)) fail("agent_radius", "must be non-negative");
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    const auto& b = s.obstacles[i];
    if (!b.center.allFinite()) fail("obstacles[" + std::to_string(i) + "].center", "must be finite");
    if (!(b.half_extents.array() > 0.0).all())
      fail("obstacles[" + std::to_string(i) + "].half_extents", "must be strictly positive");
  }
  if (s.sensor.ray_count < 1) fail("sensor.ray_count", "must be >= 1");
  if (s.sensor.ray_count < coefficient_count(s.estimation.max_order))
    fail("sensor.ray_count", "must be >= (max_order+1)^2");
  if (!(s.sensor.max_range > 0.0)) fail("sensor.max_range", "must be positive");
  if (!(s.sensor.noise_std >= 0.0)) fail("sensor.noise_std", "must be non-negative");
  if (!(s.sensor.eps_r > 0.0)) fail("sensor.eps_r", "must be positive");
  if (s.estimation.max_order < 0) fail("estimation.max_order", "must be non-negative");
  if (s.estimation.soft_dir_count < coefficient_count(s.estimation.max_order))
    fail("estimation.soft_dir_count", "must be >= (max_order+1)^2");
  if (!(s.estimation.weight_cap_factor > 0.0)) fail("estimation.weight_cap_factor", "must be positive");
  if (!(s.estimation.tol > 0.0)) fail("estimation.tol", "must be positive");
  if (s.estimation.max_iter < 1) fail("estimation.max_iter", "must be >= 1");
  if (s.max_steps < 1) fail("max_steps", "must be >= 1");
  if (!(s.goal_tolerance > 0.0)) fail("goal_tolerance", "must be positive");
  if (s.brake_budget < 0) fail("brake_budget", "must be non-negative");
  try {
    validate(s.planner);
  } catch (const std::invalid_argument& e) {
    fail("planner", e.what());
  }
  // eroded radii never drop below eps_r, so the field claims at least that much room
  if (s.planner.collision_margin < s.sensor.eps_r)
    fail("planner.collision_margin", "must be at least sensor.eps_r");
  try {
    validate(s.dynamics);
  } catch (const std::invalid_argument& e) {
    fail("dynamics", e.what());
  }
}

double max_speed(const PlannerParams& p) {
  const Eigen::Vector3d m = p.u_lower.head<3>().cwiseAbs().cwiseMax(p.u_upper.head<3>().cwiseAbs());
  return m.norm();
}

double scenario_roi(const Scenario& s) {
  const double horizon = s.planner.horizon_steps * s.dynamics.dt;
  return roi_radius(std::abs(s.dynamics.k) * max_speed(s.planner), horizon, s.agent_radius);
}

PointCloud simulate_scan(const AgentState& state, std::span<const BoxObstacle> obstacles,
                         const SensorParams& sensor, std::mt19937_64* rng) {
  if (sensor.ray_count < 1) throw std::invalid_argument("simulate_scan: ray_count must be >= 1");
  const Directions dirs = fibonacci_directions(sensor.ray_count);
  const std::vector<double> hits = kernels::cast_rays_omp(state.p, dirs, obstacles, sensor.max_range);

  PointCloud cloud;
  cloud.frame_origin = state.p;
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool noisy = sensor.noise_std > 0.0 && rng != nullptr;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (!std::isfinite(hits[i])) continue;
    double r = hits[i];
    if (noisy) r = std::max(r + sensor.noise_std * normal(*rng), sensor.eps_r);
    cloud.points.push_back(r * unit_vector(dirs[i]));
  }
  return cloud;
}

double ground_truth_clearance(const Vec3& p, std::span<const BoxObstacle> obstacles, double r_a) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& b : obstacles) d = std::min(d, box_signed_distance(p, b));
  return d - r_a;
}

double required_gap(double r_a, double w_b, int dims) {
  if (r_a < 0.0 || w_b < 0.0) throw std::invalid_argument("required_gap: inputs must be non-negative");
  if (dims != 2 && dims != 3) throw std::invalid_argument("required_gap: dims must be 2 or 3");
  return 2.0 * r_a + w_b * (std::sqrt(static_cast<double>(dims)) - 1.0);
}

double ray_spread(int ray_count) {
  return 0.5 * std::sqrt(4.0 * std::numbers::pi / ray_count);
}

std::string_view to_string(ErosionMode m) {
  return m == ErosionMode::Radial ? "radial" : "swept";
}

PointCloud preprocess_scan(const PointCloud& raw, const Scenario& s) {
  const double roi = scenario_roi(s);
  if (s.erosion == ErosionMode::Radial) return preprocess_cloud(raw, roi, s.agent_radius, s.sensor.eps_r);
  const PointCloud clamped = clamp_to_roi(raw, roi);
  return erode_swept(clamped, fibonacci_directions(s.sensor.ray_count), s.agent_radius,
                     std::max(roi - s.agent_radius, s.sensor.eps_r), s.sensor.eps_r,
                     ray_spread(s.sensor.ray_count));
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::ReachedGoal: return "ReachedGoal";
    case Outcome::Timeout: return "Timeout";
    case Outcome::Collision: return "Collision";
    case Outcome::PlannerFailure: return "PlannerFailure";
  }
  return "unknown";
}

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Ground-truth clearance sampled along a noise-free step from x.
double min_clearance_along(const AgentState& x, const ControlInput& u, const Scenario& s, int samples) {
  DynamicsParams fine = s.dynamics;
  fine.dt = s.dynamics.dt / samples;
  fine.process_noise_std.setZero();
  AgentState cur = x;
  double c = ground_truth_clearance(cur.p, s.obstacles, s.agent_radius);
  for (int i = 0; i < samples; ++i) {
    cur = dynamics_step(cur, u, fine);
    c = std::min(c, ground_truth_clearance(cur.p, s.obstacles, s.agent_radius));
  }
  return c;
}

}  // namespace

TrajectoryLog run_closed_loop(const Scenario& scenario, const RunOptions& options) {
  validate(scenario);
  if (ground_truth_clearance(scenario.start.p, scenario.obstacles, scenario.agent_radius) < 0.0)
    throw std::invalid_argument("start: agent overlaps an obstacle");

  std::mt19937_64 rng(scenario.seed);
  const double roi = scenario_roi(scenario);
  EstimationParams est_params = scenario.estimation;
  est_params.free_radius = roi - scenario.agent_radius;
  if (!(est_params.free_radius > 0.0)) throw std::invalid_argument("planner: input bounds give zero travel radius");

  MpcPlanner planner(scenario.planner, scenario.dynamics);
  TrajectoryLog log;
  AgentState x = scenario.start;
  int consecutive_infeasible = 0;
  log.outcome = Outcome::Timeout;

  for (int step = 0; step < scenario.max_steps; ++step) {
    if ((x.p - scenario.goal).norm() <= scenario.goal_tolerance) {
      log.outcome = Outcome::ReachedGoal;
      break;
    }
    StepRecord rec;
    rec.step = step;
    rec.time = step * scenario.dynamics.dt;
    rec.state = x;

    auto t0 = std::chrono::steady_clock::now();
    const PointCloud raw = simulate_scan(x, scenario.obstacles, scenario.sensor, &rng);
    rec.times.scan_ms = ms_since(t0);
    rec.returned_points = static_cast<int>(raw.points.size());

    t0 = std::chrono::steady_clock::now();
    const PointCloud cloud = preprocess_scan(raw, scenario);
    FreeSpaceEstimate est = estimate_freespace(cloud, est_params);
    rec.times.estimate_ms = ms_since(t0);
    rec.weights = est.expansion.weights();
    rec.estimation = est.diagnostics;

    t0 = std::chrono::steady_clock::now();
    const MpcSolution sol = planner.plan(est, x, scenario.goal);
    rec.times.plan_ms = ms_since(t0);
    rec.planner = sol.diagnostics;

    if (sol.diagnostics.status == PlannerStatus::Infeasible) {
      rec.braked = true;
      rec.applied = ControlInput{};
      ++consecutive_infeasible;
    } else {
      rec.applied = sol.inputs.front();
      consecutive_infeasible = 0;
    }

    rec.min_clearance = min_clearance_along(x, rec.applied, scenario, 10);
    x = dynamics_step(x, rec.applied, scenario.dynamics, &rng);
    rec.min_clearance = std::min(rec.min_clearance,
                                 ground_truth_clearance(x.p, scenario.obstacles, scenario.agent_radius));
    log.steps.push_back(std::move(rec));
    if (options.on_step) options.on_step(log.steps.back(), est);

    if (log.steps.back().min_clearance < 0.0) {
      log.outcome = Outcome::Collision;
      break;
    }
    if (consecutive_infeasible > scenario.brake_budget) {
      log.outcome = Outcome::PlannerFailure;
      break;
    }
  }
  if (log.outcome == Outcome::Timeout && (x.p - scenario.goal).norm() <= scenario.goal_tolerance)
    log.outcome = Outcome::ReachedGoal;
  log.final_state = x;
  return log;
}

Scenario canonical_corridor_scenario() {
  Scenario s;
  s.agent_radius = 0.5;
  const double w_b = 2.0;
  const double gap = 2.0 * s.agent_radius + 0.4;
  const double box_y = 0.5 * gap + 0.5 * w_b;
  s.obstacles = {
      {Vec3(0.0, box_y, 0.0), Vec3(0.5 * w_b, 0.5 * w_b, 3.0)},
      {Vec3(0.0, -box_y, 0.0), Vec3(0.5 * w_b, 0.5 * w_b, 3.0)},
  };
  s.start.p = Vec3(-5.0, box_y, 0.0);
  s.goal = Vec3(5.0, 0.0, 0.0);
  s.sensor = SensorParams{1000, 20.0, 0.0, 0.05};
  s.estimation.max_order = 4;
  s.estimation.soft_dir_count = 1000;
  s.planner.horizon_steps = 4;
  s.dynamics.dt = 0.5;
  s.max_steps = 300;
  s.goal_tolerance = 0.25;
  s.seed = 7;
  return s;
}

}  // namespace shplan
