#include "shplan/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace shplan {

using nlohmann::json;

int exit_code_for(Outcome outcome) {
  switch (outcome) {
    case Outcome::ReachedGoal: return kExitReachedGoal;
    case Outcome::Timeout: return kExitTimeout;
    case Outcome::Collision: return kExitCollision;
    case Outcome::PlannerFailure: return kExitPlannerFailure;
  }
  return kExitUsage;
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::Validation, field + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) invalid(path + it.key(), "unknown field");
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) invalid(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(field, "must be finite");
  return v;
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) invalid(field, "expected an integer");
  return j.get<int>();
}

// null maps to `null_value` (used for unbounded entries).
template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const std::string& field,
                                double null_value = std::numeric_limits<double>::quiet_NaN()) {
  if (!j.is_array() || j.size() != N) invalid(field, "expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (j[i].is_null() && !std::isnan(null_value))
      v[i] = null_value;
    else
      v[i] = number(j[i], f);
  }
  return v;
}

template <int N>
Eigen::Matrix<double, N, N> weight_matrix(const json& j, const std::string& field) {
  Eigen::Matrix<double, N, N> m;
  if (j.is_array() && j.size() == N && j[0].is_number()) {
    m = vec<N>(j, field).asDiagonal();
    return m;
  }
  if (!j.is_array() || j.size() != N) invalid(field, "expected a diagonal or a square matrix");
  for (int r = 0; r < N; ++r) m.row(r) = vec<N>(j[r], field + "[" + std::to_string(r) + "]").transpose();
  return m;
}

template <int N>
json to_json(const Eigen::Matrix<double, N, 1>& v) {
  json a = json::array();
  for (int i = 0; i < N; ++i) {
    if (std::isfinite(v[i]))
      a.push_back(v[i]);
    else
      a.push_back(nullptr);
  }
  return a;
}

template <int N>
json matrix_json(const Eigen::Matrix<double, N, N>& m) {
  json a = json::array();
  for (int r = 0; r < N; ++r) a.push_back(to_json<N>(m.row(r).transpose()));
  return a;
}

std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

Scenario from_json(const json& root) {
  if (!root.is_object()) invalid("(root)", "expected an object");
  reject_unknown(root, "", {"format_version", "start", "goal", "agent_radius", "obstacles", "sensor", "erosion", "estimation",
                            "planner", "dynamics", "max_steps", "goal_tolerance", "seed", "brake_budget"});
  if (!root.contains("format_version")) invalid("format_version", "missing");
  if (integer(root["format_version"], "format_version") != kFormatVersion)
    invalid("format_version", "unsupported version (expected " + std::to_string(kFormatVersion) + ")");

  Scenario s;
  if (!root.contains("start")) invalid("start", "missing");
  const json& st = root["start"];
  if (!st.is_object()) invalid("start", "expected an object");
  reject_unknown(st, "start.", {"position", "heading", "velocity", "heading_rate"});
  if (!st.contains("position")) invalid("start.position", "missing");
  s.start.p = vec<3>(st["position"], "start.position");
  if (st.contains("heading")) s.start.psi = number(st["heading"], "start.heading");
  if (st.contains("velocity")) s.start.v = vec<3>(st["velocity"], "start.velocity");
  if (st.contains("heading_rate")) s.start.psi_dot = number(st["heading_rate"], "start.heading_rate");
  if (s.start.psi <= -std::numbers::pi || s.start.psi > std::numbers::pi) invalid("start.heading", "must lie in (-pi, pi]");

  if (!root.contains("goal")) invalid("goal", "missing");
  s.goal = vec<3>(root["goal"], "goal");
  if (root.contains("agent_radius")) s.agent_radius = number(root["agent_radius"], "agent_radius");

  if (root.contains("obstacles")) {
    const json& obs = root["obstacles"];
    if (!obs.is_array()) invalid("obstacles", "expected an array");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string f = "obstacles[" + std::to_string(i) + "]";
      if (!obs[i].is_object()) invalid(f, "expected an object");
      reject_unknown(obs[i], f + ".", {"center", "half_extents"});
      if (!obs[i].contains("center")) invalid(f + ".center", "missing");
      if (!obs[i].contains("half_extents")) invalid(f + ".half_extents", "missing");
      BoxObstacle b{vec<3>(obs[i]["center"], f + ".center"), vec<3>(obs[i]["half_extents"], f + ".half_extents")};
      for (int a = 0; a < 3; ++a)
        if (!(b.half_extents[a] > 0.0))
          invalid(f + ".half_extents[" + std::to_string(a) + "]", "must be strictly positive");
      s.obstacles.push_back(b);
    }
  }

  if (root.contains("sensor")) {
    const json& j = root["sensor"];
    if (!j.is_object()) invalid("sensor", "expected an object");
    reject_unknown(j, "sensor.", {"ray_count", "max_range", "noise_std", "eps_r"});
    if (j.contains("ray_count")) s.sensor.ray_count = integer(j["ray_count"], "sensor.ray_count");
    if (j.contains("max_range")) s.sensor.max_range = number(j["max_range"], "sensor.max_range");
    if (j.contains("noise_std")) s.sensor.noise_std = number(j["noise_std"], "sensor.noise_std");
    if (j.contains("eps_r")) s.sensor.eps_r = number(j["eps_r"], "sensor.eps_r");
  }

  if (root.contains("erosion")) {
    const json& j = root["erosion"];
    if (j == "radial")
      s.erosion = ErosionMode::Radial;
    else if (j == "swept")
      s.erosion = ErosionMode::Swept;
    else
      invalid("erosion", "expected \"radial\" or \"swept\"");
  }

  if (root.contains("estimation")) {
    const json& j = root["estimation"];
    if (!j.is_object()) invalid("estimation", "expected an object");
    reject_unknown(j, "estimation.", {"max_order", "soft_dir_count", "weight_cap_factor", "tol", "max_iter"});
    if (j.contains("max_order")) s.estimation.max_order = integer(j["max_order"], "estimation.max_order");
    if (j.contains("soft_dir_count"))
      s.estimation.soft_dir_count = integer(j["soft_dir_count"], "estimation.soft_dir_count");
    if (j.contains("weight_cap_factor"))
      s.estimation.weight_cap_factor = number(j["weight_cap_factor"], "estimation.weight_cap_factor");
    if (j.contains("tol")) s.estimation.tol = number(j["tol"], "estimation.tol");
    if (j.contains("max_iter")) s.estimation.max_iter = integer(j["max_iter"], "estimation.max_iter");
  }

  if (root.contains("planner")) {
    const json& j = root["planner"];
    if (!j.is_object()) invalid("planner", "expected an object");
    reject_unknown(j, "planner.", {"horizon_steps", "P", "Q", "x_lower", "x_upper", "u_lower", "u_upper",
                                   "collision_tol", "collision_margin", "clearance_samples", "max_iter",
                                   "convergence_tol"});
    auto& p = s.planner;
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (j.contains("horizon_steps")) p.horizon_steps = integer(j["horizon_steps"], "planner.horizon_steps");
    if (j.contains("P")) p.P = weight_matrix<3>(j["P"], "planner.P");
    if (j.contains("Q")) p.Q = weight_matrix<4>(j["Q"], "planner.Q");
    if (j.contains("x_lower")) p.x_lower = vec<8>(j["x_lower"], "planner.x_lower", -inf);
    if (j.contains("x_upper")) p.x_upper = vec<8>(j["x_upper"], "planner.x_upper", inf);
    if (j.contains("u_lower")) p.u_lower = vec<4>(j["u_lower"], "planner.u_lower");
    if (j.contains("u_upper")) p.u_upper = vec<4>(j["u_upper"], "planner.u_upper");
    if (j.contains("collision_tol")) p.collision_tol = number(j["collision_tol"], "planner.collision_tol");
    if (j.contains("collision_margin"))
      p.collision_margin = number(j["collision_margin"], "planner.collision_margin");
    if (j.contains("clearance_samples"))
      p.clearance_samples = integer(j["clearance_samples"], "planner.clearance_samples");
    if (j.contains("max_iter")) p.max_iter = integer(j["max_iter"], "planner.max_iter");
    if (j.contains("convergence_tol"))
      p.convergence_tol = number(j["convergence_tol"], "planner.convergence_tol");
  }

  if (root.contains("dynamics")) {
    const json& j = root["dynamics"];
    if (!j.is_object()) invalid("dynamics", "expected an object");
    reject_unknown(j, "dynamics.", {"tau", "k", "tau_psi", "k_psi", "dt", "max_substep", "process_noise_std"});
    auto& d = s.dynamics;
    if (j.contains("tau")) d.tau = number(j["tau"], "dynamics.tau");
    if (j.contains("k")) d.k = number(j["k"], "dynamics.k");
    if (j.contains("tau_psi")) d.tau_psi = number(j["tau_psi"], "dynamics.tau_psi");
    if (j.contains("k_psi")) d.k_psi = number(j["k_psi"], "dynamics.k_psi");
    if (j.contains("dt")) d.dt = number(j["dt"], "dynamics.dt");
    if (j.contains("max_substep")) d.max_substep = number(j["max_substep"], "dynamics.max_substep");
    if (j.contains("process_noise_std"))
      d.process_noise_std = vec<8>(j["process_noise_std"], "dynamics.process_noise_std");
  }

  if (root.contains("max_steps")) s.max_steps = integer(root["max_steps"], "max_steps");
  if (root.contains("goal_tolerance")) s.goal_tolerance = number(root["goal_tolerance"], "goal_tolerance");
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) invalid("seed", "expected a non-negative integer");
    s.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("brake_budget")) s.brake_budget = integer(root["brake_budget"], "brake_budget");

  try {
    validate(s);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(ScenarioError::Kind::Validation, e.what());
  }
  return s;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw ScenarioError(ScenarioError::Kind::Io, "cannot open for writing: " + path.string());
  f << std::setprecision(17);
  return f;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(ScenarioError::Kind::Parse, "parse error at " + line_context(text, e.byte) + ": " + e.what());
  }
  return from_json(root);
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError(ScenarioError::Kind::Io, "cannot read scenario file: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_scenario_text(ss.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(e.kind(), path.string() + ": " + e.what());
  }
}

std::string serialize_scenario(const Scenario& s) {
  json root;
  root["format_version"] = kFormatVersion;
  root["start"] = {{"position", to_json<3>(s.start.p)},
                   {"heading", s.start.psi},
                   {"velocity", to_json<3>(s.start.v)},
                   {"heading_rate", s.start.psi_dot}};
  root["goal"] = to_json<3>(s.goal);
  root["agent_radius"] = s.agent_radius;
  root["obstacles"] = json::array();
  for (const auto& b : s.obstacles)
    root["obstacles"].push_back({{"center", to_json<3>(b.center)}, {"half_extents", to_json<3>(b.half_extents)}});
  root["sensor"] = {{"ray_count", s.sensor.ray_count},
                    {"max_range", s.sensor.max_range},
                    {"noise_std", s.sensor.noise_std},
                    {"eps_r", s.sensor.eps_r}};
  root["erosion"] = std::string(to_string(s.erosion));
  root["estimation"] = {{"max_order", s.estimation.max_order},
                        {"soft_dir_count", s.estimation.soft_dir_count},
                        {"weight_cap_factor", s.estimation.weight_cap_factor},
                        {"tol", s.estimation.tol},
                        {"max_iter", s.estimation.max_iter}};
  const auto& p = s.planner;
  root["planner"] = {{"horizon_steps", p.horizon_steps},
                     {"P", matrix_json<3>(p.P)},
                     {"Q", matrix_json<4>(p.Q)},
                     {"x_lower", to_json<8>(p.x_lower)},
                     {"x_upper", to_json<8>(p.x_upper)},
                     {"u_lower", to_json<4>(p.u_lower)},
                     {"u_upper", to_json<4>(p.u_upper)},
                     {"collision_tol", p.collision_tol},
                     {"collision_margin", p.collision_margin},
                     {"clearance_samples", p.clearance_samples},
                     {"max_iter", p.max_iter},
                     {"convergence_tol", p.convergence_tol}};
  const auto& d = s.dynamics;
  root["dynamics"] = {{"tau", d.tau},       {"k", d.k},   {"tau_psi", d.tau_psi},
                      {"k_psi", d.k_psi},   {"dt", d.dt}, {"max_substep", d.max_substep},
                      {"process_noise_std", to_json<8>(d.process_noise_std)}};
  root["max_steps"] = s.max_steps;
  root["goal_tolerance"] = s.goal_tolerance;
  root["seed"] = s.seed;
  root["brake_budget"] = s.brake_budget;
  return root.dump(2) + "\n";
}

RunSummary summarize(const TrajectoryLog& log) {
  RunSummary r;
  r.outcome = log.outcome;
  r.steps = static_cast<int>(log.steps.size());
  r.min_clearance = std::numeric_limits<double>::infinity();
  std::vector<double> step_ms;
  std::vector<double> warm_iters;
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const auto& s = log.steps[i];
    const Vec3 next = i + 1 < log.steps.size() ? log.steps[i + 1].state.p : log.final_state.p;
    r.path_length += (next - s.state.p).norm();
    r.min_clearance = std::min(r.min_clearance, s.min_clearance);
    step_ms.push_back(s.times.estimate_ms + s.times.plan_ms);
    if (i == 0)
      r.first_plan_iterations = s.planner.iterations;
    else
      warm_iters.push_back(s.planner.iterations);
  }
  r.step_ms_p50 = percentile(step_ms, 0.5);
  r.step_ms_p90 = percentile(step_ms, 0.9);
  r.step_ms_max = step_ms.empty() ? 0.0 : *std::max_element(step_ms.begin(), step_ms.end());
  r.warm_plan_iterations_median = percentile(warm_iters, 0.5);
  if (log.steps.empty()) r.min_clearance = 0.0;
  return r;
}

const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols = {
      "step",           "time_s",         "x_m",           "y_m",          "z_m",
      "heading_rad",    "vx_body_mps",    "vy_body_mps",   "vz_body_mps",  "heading_rate_radps",
      "u_vx_mps",       "u_vy_mps",       "u_vz_mps",      "u_heading_radps", "min_clearance_m",
      "scan_ms",        "estimate_ms",    "plan_ms",       "returned_points", "estimate_iterations",
      "plan_iterations", "plan_status_code", "braked"};
  return cols;
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log) {
  std::ofstream f = open_out(path);
  f << "# format_version: " << kFormatVersion << "\n";
  const auto& cols = trajectory_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) f << (i ? "," : "") << cols[i];
  f << "\n";
  for (const auto& s : log.steps) {
    f << s.step << ',' << s.time << ',' << s.state.p.x() << ',' << s.state.p.y() << ',' << s.state.p.z() << ','
      << s.state.psi << ',' << s.state.v.x() << ',' << s.state.v.y() << ',' << s.state.v.z() << ','
      << s.state.psi_dot << ',' << s.applied.u_v.x() << ',' << s.applied.u_v.y() << ',' << s.applied.u_v.z()
      << ',' << s.applied.u_psi << ',' << s.min_clearance << ',' << s.times.scan_ms << ','
      << s.times.estimate_ms << ',' << s.times.plan_ms << ',' << s.returned_points << ','
      << s.estimation.iterations << ',' << s.planner.iterations << ','
      << static_cast<int>(s.planner.status) << ',' << (s.braked ? 1 : 0) << "\n";
  }
  if (!f) throw ScenarioError(ScenarioError::Kind::Io, "write failed: " + path.string());
}

void write_surface_dump(const std::filesystem::path& path, const FreeSpaceEstimate& est, const Directions& probe) {
  std::ofstream f = open_out(path);
  f << "# format_version: " << kFormatVersion << "\n";
  f << "# center_m: " << est.expansion.center().x() << ' ' << est.expansion.center().y() << ' '
    << est.expansion.center().z() << "\n";
  f << "theta_rad,phi_rad,r_m\n";
  for (const auto& d : probe) f << d.theta << ',' << d.phi << ',' << est.expansion.eval_radius(d.theta, d.phi) << "\n";
  if (!f) throw ScenarioError(ScenarioError::Kind::Io, "write failed: " + path.string());
}

void write_summary_json(const std::filesystem::path& path, const RunSummary& r) {
  json j;
  j["format_version"] = kFormatVersion;
  j["outcome"] = std::string(to_string(r.outcome));
  j["exit_code"] = exit_code_for(r.outcome);
  j["steps"] = r.steps;
  j["path_length_m"] = r.path_length;
  j["min_clearance_m"] = r.min_clearance;
  j["step_ms_p50"] = r.step_ms_p50;
  j["step_ms_p90"] = r.step_ms_p90;
  j["step_ms_max"] = r.step_ms_max;
  j["first_plan_iterations"] = r.first_plan_iterations;
  j["warm_plan_iterations_median"] = r.warm_plan_iterations_median;
  std::ofstream f = open_out(path);
  f << j.dump(2) << "\n";
  if (!f) throw ScenarioError(ScenarioError::Kind::Io, "write failed: " + path.string());
}

int run_command(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir,
                const RunFlags& flags, std::ostream& err) {
  Scenario scenario;
  try {
    scenario = parse_scenario(scenario_path);
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ScenarioError::Kind::Io ? kExitIoError : kExitConfigError;
  }
  if (flags.seed) scenario.seed = *flags.seed;

  std::error_code ec;
  if (!std::filesystem::is_directory(out_dir, ec)) {
    if (!flags.create_out) {
      err << "error: output directory does not exist: " << out_dir.string() << " (pass --create to make it)\n";
      return kExitIoError;
    }
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      err << "error: cannot create output directory " << out_dir.string() << ": " << ec.message() << "\n";
      return kExitIoError;
    }
  }
  const auto surf_dir = out_dir / "surfaces";
  if (flags.surface_dumps) {
    std::filesystem::create_directories(surf_dir, ec);
    if (ec) {
      err << "error: cannot create " << surf_dir.string() << ": " << ec.message() << "\n";
      return kExitIoError;
    }
  }

  try {
    RunOptions opts;
    const Directions probe = fibonacci_directions(flags.probe_count);
    if (flags.surface_dumps) {
      opts.on_step = [&](const StepRecord& rec, const FreeSpaceEstimate& est) {
        std::ostringstream name;
        name << "surface_" << std::setw(4) << std::setfill('0') << rec.step << ".csv";
        write_surface_dump(surf_dir / name.str(), est, probe);
      };
    }
    TrajectoryLog log;
    try {
      log = run_closed_loop(scenario, opts);
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n";
      return kExitConfigError;
    }
    write_trajectory_csv(out_dir / "trajectory.csv", log);
    write_summary_json(out_dir / "summary.json", summarize(log));
    return exit_code_for(log.outcome);
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIoError;
  }
}

int report_gap_comparison(double r_a, const std::vector<double>& widths, const std::filesystem::path& out,
                          double margin, std::ostream& err) {
  if (!(r_a >= 0.0) || !(margin >= 0.0) || std::any_of(widths.begin(), widths.end(), [](double w) { return !(w >= 0.0); })) {
    err << "error: agent radius, margin and widths must be non-negative\n";
    return kExitConfigError;
  }
  std::ofstream f(out);
  if (!f) {
    err << "error: cannot open for writing: " << out.string() << "\n";
    return kExitIoError;
  }
  f << std::setprecision(17);
  f << "# format_version: " << kFormatVersion << "\n";
  f << "# agent_radius_m: " << r_a << "\n";
  f << "obstacle_width_m,ellipsoid_gap_2d_m,ellipsoid_gap_3d_m,harmonic_gap_m\n";
  for (double w : widths)
    f << w << ',' << required_gap(r_a, w, 2) << ',' << required_gap(r_a, w, 3) << ',' << 2.0 * r_a + margin << "\n";
  if (!f) {
    err << "error: write failed: " << out.string() << "\n";
    return kExitIoError;
  }
  return 0;
}

int validate_command(const std::filesystem::path& scenario_path, std::ostream& out, std::ostream& err) {
  try {
    const Scenario s = parse_scenario(scenario_path);
    out << "ok: " << scenario_path.string() << " (" << s.obstacles.size() << " obstacles, max_order "
        << s.estimation.max_order << ", horizon " << s.planner.horizon_steps << " x " << s.dynamics.dt << " s)\n";
    return 0;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ScenarioError::Kind::Io ? kExitIoError : kExitConfigError;
  }
}

}  // namespace shplan
