// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails.

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/brute_qp.hpp"
#include "oracles/quadrature.hpp"
#include "shplan/freespace.hpp"
#include "shplan/planner.hpp"
#include "shplan/scenario_io.hpp"
#include "shplan/sim.hpp"

using namespace shplan;

namespace {

// tolerances and limits
constexpr double kOrthoTol = 1e-6;
constexpr double kOrthoSeconds = 5.0;
constexpr double kSphereTol = 1e-4;
constexpr double kSphereSeconds = 1.0;
constexpr int kQpInstances = 50;
constexpr int kQpMaxRows = 25;
constexpr double kQpObjectiveTol = 1e-4;
constexpr double kQpFeasTol = 1e-6;
constexpr double kQpSeconds = 30.0;
constexpr int kCorridorMaxSteps = 300;
constexpr double kCorridorSeconds = 120.0;
constexpr double kStepSeconds = 1.0;
constexpr int kWorlds = 100;
constexpr double kSafetyTol = 1e-3;
constexpr double kTimingRatio = 2.0;
constexpr int kFixedPoints = 250;
constexpr double kGapTol = 1e-3;
constexpr double kRk4Tol = 1e-6;
constexpr double kGradTol = 1e-5;
constexpr int kGradInstances = 20;

struct Outcome_ {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome_ orthonormality() {
  const auto t0 = std::chrono::steady_clock::now();
  const int lmax = 4;
  const int k = coefficient_count(lmax);
  const auto nodes = oracle::sphere_rule(40, 80);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  std::vector<double> y(k);
  for (const auto& nd : nodes) {
    real_sh_all(lmax, nd.theta, nd.phi, y.data());
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) gram(a, b) += nd.weight * y[a] * y[b];
  }
  const double err = (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  const double secs = seconds_since(t0);
  return {err <= kOrthoTol && secs < kOrthoSeconds,
          "max |G - I| = " + fmt("%.2e", err) + ", " + fmt("%.3f", secs) + " s"};
}

Outcome_ sphere_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const FreeSpaceSolution sol = solve_qp(build_qp(PointCloud{}, fibonacci_directions(1000), 5.0, 4));
  const double secs = seconds_since(t0);
  const double want0 = 5.0 * std::sqrt(4.0 * std::numbers::pi);
  const double err0 = std::abs(sol.weights[0] - want0);
  const double rest = sol.weights.tail(sol.weights.size() - 1).cwiseAbs().maxCoeff();
  const bool ok = sol.diagnostics.status == QPStatus::Optimal && err0 <= kSphereTol && rest < kSphereTol &&
                  secs < kSphereSeconds;
  return {ok, "w0 = " + fmt("%.6f", sol.weights[0]) + ", max |w_j>0| = " + fmt("%.1e", rest) + ", " +
                  fmt("%.3f", secs) + " s"};
}

Outcome_ qp_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> n_soft(4, 5);
  std::uniform_real_distribution<double> ut(0.0, std::numbers::pi), up(0.0, 2.0 * std::numbers::pi),
      ur(0.05, 3.0);
  double worst_obj = 0.0, worst_feas = 0.0;
  int max_rows = 0;
  bool all_optimal = true;
  for (int inst = 0; inst < kQpInstances; ++inst) {
    PointCloud measured;
    for (int i = 0; i < 20; ++i) measured.points.push_back(sph_to_cart({ur(rng), ut(rng), up(rng)}));
    const FreeSpaceQP qp = build_qp(measured, fibonacci_directions(n_soft(rng)), 3.0, 1);
    const FreeSpaceSolution sol = solve_qp(qp);
    all_optimal = all_optimal && sol.diagnostics.status == QPStatus::Optimal;
    const DenseQP dq = to_dense(qp);
    max_rows = std::max(max_rows, dq.num_rows());
    std::vector<oracle::Halfspace> cons;
    for (int i = 0; i < dq.num_rows(); ++i) {
      const Eigen::VectorXd row = dq.G.row(i).transpose();
      cons.push_back({row, dq.lower[i], i});
      cons.push_back({-row, -dq.upper[i], i});
    }
    for (int j = 0; j < dq.num_vars(); ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dq.num_vars());
      e[j] = 1.0;
      cons.push_back({e, dq.x_lower[j], dq.num_rows() + j});
      cons.push_back({-e, -dq.x_upper[j], dq.num_rows() + j});
    }
    const oracle::BruteResult best = oracle::brute_force_qp(dq.H, dq.g, cons);
    const Eigen::VectorXd& x = sol.weights;
    const double ours = 0.5 * x.dot(dq.H * x) + dq.g.dot(x);
    worst_obj = std::max(worst_obj, std::isfinite(best.objective) ? std::abs(ours - best.objective) : 1e300);
    const Eigen::VectorXd gx = dq.G * x;
    double feas = 0.0;
    feas = std::max(feas, (dq.lower - gx).maxCoeff());
    feas = std::max(feas, (gx - dq.upper).maxCoeff());
    feas = std::max(feas, (dq.x_lower - x).maxCoeff());
    feas = std::max(feas, (x - dq.x_upper).maxCoeff());
    worst_feas = std::max(worst_feas, feas);
  }
  const double secs = seconds_since(t0);
  const bool ok = all_optimal && max_rows <= kQpMaxRows && worst_obj <= kQpObjectiveTol &&
                  worst_feas <= kQpFeasTol && secs < kQpSeconds;
  return {ok, std::to_string(kQpInstances) + " instances, <= " + std::to_string(max_rows) +
                  " rows, max |obj diff| = " + fmt("%.1e", worst_obj) + ", max violation = " +
                  fmt("%.1e", worst_feas) + ", " + fmt("%.1f", secs) + " s"};
}

struct CorridorRun {
  Scenario scenario;
  TrajectoryLog log;
  double seconds = 0.0;
};

const CorridorRun& corridor_run() {
  static const CorridorRun run = [] {
    CorridorRun r;
    r.scenario = canonical_corridor_scenario();
    const auto t0 = std::chrono::steady_clock::now();
    r.log = run_closed_loop(r.scenario);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome_ corridor() {
  const CorridorRun& run = corridor_run();
  const Scenario& s = run.scenario;
  const auto& box = s.obstacles.at(0);
  const double inner_y = box.center.y() - box.half_extents.y();
  const double x_lo = box.center.x() - box.half_extents.x(), x_hi = box.center.x() + box.half_extents.x();
  const double gap = 2.0 * inner_y;
  const double need = required_gap(s.agent_radius, 2.0 * box.half_extents.x(), 3);

  std::vector<Vec3> path;
  for (const auto& st : run.log.steps) path.push_back(st.state.p);
  path.push_back(run.log.final_state.p);
  double min_c = std::numeric_limits<double>::infinity();
  for (const auto& st : run.log.steps) min_c = std::min(min_c, st.min_clearance);

  // crossing of the boxes' mid plane, and every sample within their x span
  int crossings = 0;
  bool between = true;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec3 &a = path[i], &b = path[i + 1];
    if ((a.x() - box.center.x()) * (b.x() - box.center.x()) <= 0.0 && a.x() != b.x()) {
      const double t = (box.center.x() - a.x()) / (b.x() - a.x());
      const Vec3 c = a + t * (b - a);
      ++crossings;
      between = between && std::abs(c.y()) < inner_y && std::abs(c.z()) < box.half_extents.z();
    }
  }
  for (const auto& p : path)
    if (p.x() >= x_lo && p.x() <= x_hi) between = between && std::abs(p.y()) < inner_y;

  const bool ok = run.log.outcome == Outcome::ReachedGoal &&
                  static_cast<int>(run.log.steps.size()) <= kCorridorMaxSteps && min_c >= 0.0 && crossings >= 1 &&
                  between && gap < need && run.seconds < kCorridorSeconds;
  return {ok, std::string(to_string(run.log.outcome)) + " in " + std::to_string(run.log.steps.size()) +
                  " steps, gap " + fmt("%.3f", gap) + " < required " + fmt("%.3f", need) +
                  ", min clearance " + fmt("%.4f", min_c) + " m, plane crossings " + std::to_string(crossings) +
                  (between ? " between the boxes" : " NOT between the boxes") + ", " + fmt("%.1f", run.seconds) +
                  " s"};
}

Outcome_ timing_profile() {
  const CorridorRun& run = corridor_run();
  const auto& steps = run.log.steps;
  if (steps.size() < 2) return {false, "too few steps"};
  std::vector<double> warm;
  double worst_ms = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) warm.push_back(steps[i].planner.iterations);
    worst_ms = std::max(worst_ms, steps[i].times.estimate_ms + steps[i].times.plan_ms);
  }
  const int cold = steps[0].planner.iterations;
  const double warm_med = median(warm);
  const bool ok = cold > warm_med && worst_ms < 1000.0 * kStepSeconds;
  return {ok, "cold iterations " + std::to_string(cold) + " vs warm median " + fmt("%.1f", warm_med) +
                  ", slowest step " + fmt("%.1f", worst_ms) + " ms"};
}

Scenario random_world(std::mt19937_64& rng, int world) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, 20);
  Scenario s = canonical_corridor_scenario();
  s.obstacles.clear();
  s.start = AgentState{};
  s.goal = Vec3(8, 0, 0);
  s.seed = static_cast<std::uint64_t>(world);
  s.max_steps = 60;
  const int n = count(rng);
  while (static_cast<int>(s.obstacles.size()) < n) {
    const BoxObstacle b{Vec3(4 + 3 * u(rng), 3 * u(rng), 2 * u(rng)),
                        Vec3(0.3 + 0.2 * u(rng), 0.5 + 0.3 * u(rng), 0.5 + 0.3 * u(rng))};
    if (box_signed_distance(s.start.p, b) > s.agent_radius + 0.2 &&
        box_signed_distance(s.goal, b) > s.agent_radius + 0.2)
      s.obstacles.push_back(b);
  }
  return s;
}

// Median estimation time (preprocess + fit) over scans trimmed to the same
// number of returns, for a given obstacle count.
double median_estimate_ms(int obstacles, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), dist(2.0, 3.5);
  const Scenario base = canonical_corridor_scenario();
  EstimationParams ep = base.estimation;
  ep.free_radius = scenario_roi(base) - base.agent_radius;
  const double size = 0.4 + 2.5 / std::sqrt(static_cast<double>(obstacles));
  std::vector<double> ms;
  while (ms.size() < 15) {
    Scenario s = base;
    s.obstacles.clear();
    for (int i = 0; i < obstacles; ++i) {
      const Vec3 dir = Vec3(u(rng), u(rng), u(rng)).normalized();
      s.obstacles.push_back({dist(rng) * dir, Vec3::Constant(size) + 0.2 * Vec3(u(rng), u(rng), u(rng))});
    }
    if (ground_truth_clearance(Vec3::Zero(), s.obstacles, s.agent_radius) < 0.2) continue;
    PointCloud raw = simulate_scan(AgentState{}, s.obstacles, s.sensor);
    const int n = static_cast<int>(raw.points.size());
    if (n < kFixedPoints) continue;
    PointCloud trimmed;
    trimmed.frame_origin = raw.frame_origin;
    for (int i = 0; i < kFixedPoints; ++i) trimmed.points.push_back(raw.points[static_cast<std::size_t>(i) * n / kFixedPoints]);
    const auto t0 = std::chrono::steady_clock::now();
    const FreeSpaceEstimate est = estimate_freespace(preprocess_scan(trimmed, s), ep);
    ms.push_back(1000.0 * seconds_since(t0));
    if (est.diagnostics.status != QPStatus::Optimal) return std::numeric_limits<double>::infinity();
  }
  return median(ms);
}

Outcome_ safety_suite() {
  std::mt19937_64 rng(99);
  int feasible_runs = 0, violations = 0, collisions_feasible = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int world = 0; world < kWorlds; ++world) {
    const Scenario s = random_world(rng, world);
    const TrajectoryLog log = run_closed_loop(s);
    bool all_feasible = true;
    double min_c = std::numeric_limits<double>::infinity();
    for (const auto& r : log.steps) {
      all_feasible = all_feasible && !r.braked && r.estimation.status == QPStatus::Optimal &&
                     r.planner.max_violation <= s.planner.collision_tol;
      min_c = std::min(min_c, r.min_clearance);
    }
    if (!all_feasible) continue;
    ++feasible_runs;
    worst = std::min(worst, min_c);
    if (min_c < -kSafetyTol) ++violations;
    if (log.outcome == Outcome::Collision) ++collisions_feasible;
  }

  std::mt19937_64 trng(5);
  std::vector<double> med;
  std::string times;
  for (int n : {1, 5, 10, 20}) {
    med.push_back(median_estimate_ms(n, trng));
    times += (times.empty() ? "" : ", ") + std::to_string(n) + ": " + fmt("%.2f", med.back()) + " ms";
  }
  const double ratio = *std::max_element(med.begin(), med.end()) / *std::min_element(med.begin(), med.end());

  const bool ok = feasible_runs > 0 && violations == 0 && collisions_feasible == 0 && ratio < kTimingRatio;
  return {ok, std::to_string(feasible_runs) + "/" + std::to_string(kWorlds) +
                  " runs feasible throughout, worst clearance " + fmt("%.4f", worst) + " m, " +
                  std::to_string(violations) + " below -1e-3, " + std::to_string(collisions_feasible) +
                  " collisions; median estimate at " + std::to_string(kFixedPoints) + " returns (" + times +
                  "), ratio " + fmt("%.2f", ratio)};
}

Outcome_ gap_table() {
  const auto path = std::filesystem::temp_directory_path() / "shplan_acceptance_gap.csv";
  std::ostringstream err;
  if (report_gap_comparison(1.0, {2.0}, path, 0.0, err) != 0) return {false, "gap report failed: " + err.str()};
  std::ifstream f(path);
  std::string line, last;
  while (std::getline(f, line))
    if (!line.empty() && line[0] != '#') last = line;
  std::vector<double> cells;
  std::stringstream ss(last);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
  std::filesystem::remove(path);
  if (cells.size() != 4) return {false, "unexpected row: " + last};
  const bool ok = std::abs(cells[1] - 2.828) <= kGapTol && std::abs(cells[2] - 3.464) <= kGapTol;
  return {ok, "w_b = 2, r_a = 1: 2D " + fmt("%.4f", cells[1]) + ", 3D " + fmt("%.4f", cells[2])};
}

Outcome_ dynamics_and_gradients() {
  DynamicsParams dyn;
  dyn.tau = 0.3;
  dyn.k = 1.0;
  dyn.dt = 0.5;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> w(-2.0, 2.0);
  Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Zero();
  m.topLeftCorner<3, 3>() = -Eigen::Matrix3d::Identity() / dyn.tau;
  m.topRightCorner<3, 3>() = dyn.k * Eigen::Matrix3d::Identity() / dyn.tau;
  const Eigen::Matrix<double, 6, 6> phi = (m * dyn.dt).exp();
  double rk4_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    AgentState s;
    s.v = Vec3(w(rng), w(rng), w(rng));
    s.psi = 0.5 * w(rng);
    ControlInput u;
    u.u_v = Vec3(w(rng), w(rng), w(rng));
    u.u_psi = w(rng);
    Eigen::Matrix<double, 6, 1> z;
    z << s.v, u.u_v;
    rk4_err = std::max(rk4_err, (dynamics_step(s, u, dyn).v - (phi * z).head<3>()).cwiseAbs().maxCoeff());
  }

  std::mt19937_64 grng(123);
  std::uniform_real_distribution<double> uu(-1.0, 1.0);
  const DynamicsParams gdyn;
  const double h = 1e-6;
  double grad_err = 0.0;
  auto rel = [](const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
  };
  for (int inst = 0; inst < kGradInstances; ++inst) {
    Scenario s = canonical_corridor_scenario();
    s.agent_radius = 0.3;
    s.obstacles = {{Vec3(2.0 + uu(grng), uu(grng), uu(grng)), Vec3(0.5, 1.0, 1.0)},
                   {Vec3(uu(grng), -2.5 + uu(grng), 0.0), Vec3(1.0, 0.4, 1.0)}};
    EstimationParams ep = s.estimation;
    ep.free_radius = 2.5;
    const FreeSpaceEstimate est =
        estimate_freespace(preprocess_scan(simulate_scan(AgentState{}, s.obstacles, s.sensor), s), ep);
    PlannerParams pp;
    pp.horizon_steps = 2 + inst % 4;
    pp.x_lower.segment<3>(4).setConstant(-1.2);
    pp.x_upper.segment<3>(4).setConstant(1.2);
    AgentState x0;
    x0.v = Vec3(uu(grng), uu(grng), 0.0) * 0.3;
    x0.psi = uu(grng);
    const ShootingProblem prob(est, x0, Vec3(3, 1, 0), pp, gdyn);
    Eigen::VectorXd u(prob.num_inputs());
    for (auto& x : u) x = uu(grng);
    const auto ev = prob.evaluate(u);
    Eigen::VectorXd fd_grad(u.size());
    Eigen::MatrixXd fd_jac(prob.num_constraints(), u.size());
    for (long j = 0; j < u.size(); ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(u.size());
      e[j] = h;
      const auto plus = prob.evaluate(u + e, false);
      const auto minus = prob.evaluate(u - e, false);
      fd_grad[j] = (plus.cost - minus.cost) / (2 * h);
      fd_jac.col(j) = (plus.constraints - minus.constraints) / (2 * h);
    }
    grad_err = std::max({grad_err, rel(ev.cost_gradient, fd_grad), rel(ev.constraint_jacobian, fd_jac)});
  }
  return {rk4_err <= kRk4Tol && grad_err <= kGradTol,
          "RK4 vs matrix exponential " + fmt("%.1e", rk4_err) + ", gradient rel. error " + fmt("%.1e", grad_err) +
              " over " + std::to_string(kGradInstances) + " instances"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome_()> run;
  };
  const std::vector<Criterion> criteria{
      {"basis orthonormality", orthonormality},
      {"sphere recovery", sphere_recovery},
      {"QP oracle equivalence", qp_oracle},
      {"narrow corridor", corridor},
      {"timing profile", timing_profile},
      {"safety suite", safety_suite},
      {"gap table", gap_table},
      {"dynamics and gradients", dynamics_and_gradients},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome_ r;
    try {
      r = criteria[i].run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.pass) ++failed;
    std::printf("%s %zu %s: %s\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
