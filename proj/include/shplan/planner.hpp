#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "shplan/dynamics.hpp"
#include "shplan/freespace.hpp"

namespace shplan {

struct PlannerParams {
  int horizon_steps = 4;
  Eigen::Matrix3d P = Eigen::Matrix3d::Identity();
  Eigen::Matrix4d Q = Eigen::Matrix4d::Identity();
  /// Box on predicted states (psi entry ignored). Infinite entries are unconstrained.
  StateVec x_lower = StateVec::Constant(-std::numeric_limits<double>::infinity());
  StateVec x_upper = StateVec::Constant(std::numeric_limits<double>::infinity());
  InputVec u_lower = (InputVec() << -1.0, -1.0, -1.0, -1.0).finished();
  InputVec u_upper = (InputVec() << 1.0, 1.0, 1.0, 1.0).finished();
  /// Accepted violation of clearance >= 0 on returned trajectories [m].
  double collision_tol = 1e-6;
  /// Clearance the optimizer aims to keep internally [m]. In closed loop it
  /// must cover the eps_r floor of the eroded cloud.
  double collision_margin = 0.06;
  /// Clearance is constrained at this many evenly spaced times inside each
  /// step; the last one is the waypoint itself.
  int clearance_samples = 5;
  int max_iter = 100;
  double convergence_tol = 1e-6;
};

void validate(const PlannerParams& params);

enum class PlannerStatus { Converged, MaxIterations, Infeasible };
std::string_view to_string(PlannerStatus s);

struct PlannerDiagnostics {
  PlannerStatus status = PlannerStatus::Infeasible;
  int iterations = 0;
  double cost = 0.0;
  /// Largest violation of clearance >= 0 (at every clearance sample) and of
  /// the state bounds over t = 1..N.
  double max_violation = 0.0;
  /// Merit (penalized objective) before and after each accepted step.
  std::vector<std::pair<double, double>> merit_steps;
  double wall_ms = 0.0;
};

struct MpcSolution {
  std::vector<ControlInput> inputs;  // u_0 .. u_{N-1}
  std::vector<AgentState> states;    // x_0 .. x_N
  PlannerDiagnostics diagnostics;
};

double trajectory_cost(const std::vector<AgentState>& states, const std::vector<ControlInput>& inputs,
                       const Vec3& goal, const Eigen::Matrix3d& P, const Eigen::Matrix4d& Q);

/// Noise-free rollout of an input sequence from x0 (returns N+1 states).
std::vector<AgentState> rollout(const AgentState& x0, const std::vector<ControlInput>& inputs,
                                const DynamicsParams& dyn);

/// Single-shooting transcription: decision vector is (u_0, ..., u_{N-1}),
/// constraints are c_i(u) >= 0. Per step: clearance minus margin at each
/// clearance sample, then the finite state bounds at the waypoint.
class ShootingProblem {
 public:
  ShootingProblem(const FreeSpaceEstimate& est, const AgentState& x0, const Vec3& goal,
                  const PlannerParams& params, const DynamicsParams& dyn);

  struct Evaluation {
    double cost = 0.0;
    Eigen::VectorXd cost_gradient;
    Eigen::MatrixXd gauss_newton;  // cost Hessian without second-order dynamics terms
    Eigen::VectorXd constraints;
    Eigen::MatrixXd constraint_jacobian;
    std::vector<AgentState> states;
  };

  int num_inputs() const { return 4 * params_.horizon_steps; }
  int num_constraints() const;
  Evaluation evaluate(const Eigen::VectorXd& u, bool derivatives = true) const;
  /// Largest violation of the un-margined constraints.
  double violation(const Eigen::VectorXd& constraints) const;

 private:
  const FreeSpaceEstimate& est_;
  AgentState x0_;
  Vec3 goal_;
  PlannerParams params_;
  DynamicsParams dyn_;
  std::vector<std::pair<int, int>> bound_rows_;  // (state index, +1 lower / -1 upper)
};

/// Locally optimal inputs for the receding-horizon problem. With `warm`, the
/// initial guess is the previous inputs shifted by one step with the last
/// input repeated; otherwise all-zero inputs.
MpcSolution solve_mpc(const FreeSpaceEstimate& est, const AgentState& x0, const Vec3& goal,
                      const PlannerParams& params, const DynamicsParams& dyn,
                      const MpcSolution* warm = nullptr);

/// Holds the warm-start state between receding-horizon steps.
class MpcPlanner {
 public:
  MpcPlanner(PlannerParams params, DynamicsParams dyn);

  MpcSolution plan(const FreeSpaceEstimate& est, const AgentState& x0, const Vec3& goal);
  void reset() { previous_.reset(); }

 private:
  PlannerParams params_;
  DynamicsParams dyn_;
  std::optional<MpcSolution> previous_;
};

}  // namespace shplan
