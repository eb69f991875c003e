#include "shplan/planner.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "shplan/qp.hpp"

namespace shplan {

std::string_view to_string(PlannerStatus s) {
  switch (s) {
    case PlannerStatus::Converged: return "converged";
    case PlannerStatus::MaxIterations: return "max_iterations";
    case PlannerStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

void validate(const PlannerParams& p) {
  if (p.horizon_steps < 1) throw std::invalid_argument("planner: horizon_steps must be >= 1");
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> ep(p.P);
  if (!(ep.eigenvalues().minCoeff() > 0.0)) throw std::invalid_argument("planner: P must be positive definite");
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eq(p.Q);
  if (!(eq.eigenvalues().minCoeff() > 0.0)) throw std::invalid_argument("planner: Q must be positive definite");
  if ((p.u_lower.array() > p.u_upper.array()).any()) throw std::invalid_argument("planner: u_lower > u_upper");
  if ((p.x_lower.array() > p.x_upper.array()).any()) throw std::invalid_argument("planner: x_lower > x_upper");
  if (p.collision_tol < 0.0 || p.collision_margin < 0.0)
    throw std::invalid_argument("planner: collision tolerance and margin must be non-negative");
  if (p.max_iter < 1) throw std::invalid_argument("planner: max_iter must be >= 1");
  if (p.clearance_samples < 1) throw std::invalid_argument("planner: clearance_samples must be >= 1");
}

double trajectory_cost(const std::vector<AgentState>& states, const std::vector<ControlInput>& inputs,
                       const Vec3& goal, const Eigen::Matrix3d& P, const Eigen::Matrix4d& Q) {
  if (states.size() != inputs.size() + 1)
    throw std::invalid_argument("trajectory_cost: need N+1 states for N inputs");
  double j = 0.0;
  for (std::size_t t = 1; t < states.size(); ++t) {
    const Vec3 e = states[t].p - goal;
    const InputVec u = to_vector(inputs[t - 1]);
    j += e.dot(P * e) + u.dot(Q * u);
  }
  return j;
}

std::vector<AgentState> rollout(const AgentState& x0, const std::vector<ControlInput>& inputs,
                                const DynamicsParams& dyn) {
  std::vector<AgentState> states{x0};
  states.reserve(inputs.size() + 1);
  for (const auto& u : inputs) states.push_back(dynamics_step(states.back(), u, dyn));
  return states;
}

ShootingProblem::ShootingProblem(const FreeSpaceEstimate& est, const AgentState& x0, const Vec3& goal,
                                 const PlannerParams& params, const DynamicsParams& dyn)
    : est_(est), x0_(x0), goal_(goal), params_(params), dyn_(dyn) {
  for (int i = 0; i < 8; ++i) {
    if (i == 3) continue;
    if (std::isfinite(params_.x_lower[i])) bound_rows_.emplace_back(i, +1);
    if (std::isfinite(params_.x_upper[i])) bound_rows_.emplace_back(i, -1);
  }
}

int ShootingProblem::num_constraints() const {
  return params_.horizon_steps * (params_.clearance_samples + static_cast<int>(bound_rows_.size()));
}

double ShootingProblem::violation(const Eigen::VectorXd& c) const {
  const int m = params_.clearance_samples;
  const int per_step = m + static_cast<int>(bound_rows_.size());
  double v = 0.0;
  for (long i = 0; i < c.size(); ++i) {
    const bool clearance = i % per_step < m;
    v = std::max(v, -(c[i] + (clearance ? params_.collision_margin : 0.0)));
  }
  return v;
}

ShootingProblem::Evaluation ShootingProblem::evaluate(const Eigen::VectorXd& u, bool derivatives) const {
  const int n = params_.horizon_steps;
  const int nu = num_inputs();
  const int nb = static_cast<int>(bound_rows_.size());
  Evaluation ev;
  ev.constraints.resize(num_constraints());
  if (derivatives) {
    ev.cost_gradient = Eigen::VectorXd::Zero(nu);
    ev.gauss_newton = Eigen::MatrixXd::Zero(nu, nu);
    ev.constraint_jacobian = Eigen::MatrixXd::Zero(num_constraints(), nu);
  }
  ev.states.reserve(n + 1);
  ev.states.push_back(x0_);

  const int m = params_.clearance_samples;
  DynamicsParams sub = dyn_;
  sub.dt = dyn_.dt / m;
  StateVec x = to_vector(x0_);
  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(8, nu);  // d x / d u
  double cost = 0.0;
  for (int t = 0; t < n; ++t) {
    const InputVec ut = u.segment<4>(4 * t);
    const int row = t * (m + nb);
    for (int k = 0; k < m; ++k) {
      if (derivatives) {
        const StepJacobian sj = dynamics_step_jacobian(x, ut, sub);
        Eigen::MatrixXd next_sens = sj.dx * sens;
        next_sens.middleCols<4>(4 * t) += sj.du;
        sens = std::move(next_sens);
        x = sj.next;
        const ClearanceJet cj = signed_clearance_jet(est_, x.head<3>());
        ev.constraints[row + k] = cj.value - params_.collision_margin;
        ev.constraint_jacobian.row(row + k) = cj.gradient.transpose() * sens.topRows<3>();
      } else {
        x = to_vector(dynamics_step(from_vector(x), input_from_vector(ut), sub));
        ev.constraints[row + k] = signed_clearance(est_, x.head<3>()) - params_.collision_margin;
      }
    }
    const AgentState st = from_vector(x);
    ev.states.push_back(st);

    const Vec3 e = st.p - goal_;
    cost += e.dot(params_.P * e) + ut.dot(params_.Q * ut);
    if (derivatives) {
      const Eigen::MatrixXd sp = sens.topRows<3>();
      ev.cost_gradient += 2.0 * sp.transpose() * (params_.P * e);
      ev.cost_gradient.segment<4>(4 * t) += 2.0 * params_.Q * ut;
      ev.gauss_newton += 2.0 * sp.transpose() * params_.P * sp;
      ev.gauss_newton.block<4, 4>(4 * t, 4 * t) += 2.0 * params_.Q;
    }
    for (int b = 0; b < nb; ++b) {
      const auto [idx, sign] = bound_rows_[b];
      ev.constraints[row + m + b] = sign > 0 ? x[idx] - params_.x_lower[idx] : params_.x_upper[idx] - x[idx];
      if (derivatives) ev.constraint_jacobian.row(row + m + b) = sign * sens.row(idx);
    }
  }
  ev.cost = cost;
  return ev;
}

namespace {

double negative_part_sum(const Eigen::VectorXd& c) { return (-c.array()).max(0.0).sum(); }

std::vector<ControlInput> unpack(const Eigen::VectorXd& u) {
  std::vector<ControlInput> out;
  for (long t = 0; t < u.size() / 4; ++t) out.push_back(input_from_vector(u.segment<4>(4 * t)));
  return out;
}

}  // namespace

MpcSolution solve_mpc(const FreeSpaceEstimate& est, const AgentState& x0, const Vec3& goal,
                      const PlannerParams& params, const DynamicsParams& dyn, const MpcSolution* warm) {
  validate(params);
  validate(dyn);
  const auto t_start = std::chrono::steady_clock::now();
  const int n = params.horizon_steps;
  const int nu = 4 * n;
  const ShootingProblem problem(est, x0, goal, params, dyn);
  const int nc = problem.num_constraints();
  constexpr double kMinPenalty = 10.0;
  constexpr double kMaxPenalty = 1e6;
  constexpr double kSlackReg = 1e-6;

  Eigen::VectorXd lo(nu), hi(nu);
  for (int t = 0; t < n; ++t) {
    lo.segment<4>(4 * t) = params.u_lower;
    hi.segment<4>(4 * t) = params.u_upper;
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(nu);
  if (warm != nullptr && !warm->inputs.empty()) {
    const int m = static_cast<int>(warm->inputs.size());
    for (int t = 0; t < n; ++t) u.segment<4>(4 * t) = to_vector(warm->inputs[std::min(t + 1, m - 1)]);
  }
  u = u.cwiseMax(lo).cwiseMin(hi);

  MpcSolution sol;
  PlannerDiagnostics& diag = sol.diagnostics;
  Eigen::MatrixXd hess;
  double penalty = kMinPenalty;

  auto finish = [&](const Eigen::VectorXd& uu, const ShootingProblem::Evaluation& ev, PlannerStatus status) {
    sol.inputs = unpack(uu);
    sol.states = ev.states;
    diag.status = status;
    diag.cost = ev.cost;
    diag.max_violation = problem.violation(ev.constraints);
    diag.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    return sol;
  };

  if (signed_clearance(est, x0.p) < -params.collision_tol) {
    return finish(u, problem.evaluate(u, false), PlannerStatus::Infeasible);
  }

  ShootingProblem::Evaluation ev = problem.evaluate(u);
  hess = ev.gauss_newton;

  std::optional<Eigen::VectorXd> best_u;
  double best_cost = std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& uu, const ShootingProblem::Evaluation& e) {
    if (problem.violation(e.constraints) <= params.collision_tol &&
        e.cost < best_cost) {
      best_cost = e.cost;
      best_u = uu;
    }
  };
  consider(u, ev);

  PlannerStatus status = PlannerStatus::MaxIterations;
  int iter = 0;
  for (; iter < params.max_iter; ++iter) {
    // Elastic QP in (step, slack): slack keeps the linearization feasible.
    hess = 0.5 * (hess + hess.transpose());
    // quasi-Newton updates can drift toward singular in floating point
    {
      const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess, Eigen::EigenvaluesOnly).eigenvalues();
      if (!(eig.minCoeff() > 1e-10 * eig.maxCoeff())) hess = ev.gauss_newton;
    }
    DenseQP qp;
    qp.H = Eigen::MatrixXd::Zero(nu + nc, nu + nc);
    qp.H.topLeftCorner(nu, nu) = hess;
    qp.H.bottomRightCorner(nc, nc).diagonal().setConstant(kSlackReg);
    qp.g.resize(nu + nc);
    qp.g.head(nu) = ev.cost_gradient;
    qp.G.resize(nc, nu + nc);
    qp.G.leftCols(nu) = ev.constraint_jacobian;
    qp.G.rightCols(nc) = Eigen::MatrixXd::Identity(nc, nc);
    qp.lower = -ev.constraints;
    qp.upper = Eigen::VectorXd::Constant(nc, std::numeric_limits<double>::infinity());
    qp.x_lower.resize(nu + nc);
    qp.x_upper.resize(nu + nc);
    qp.x_lower.head(nu) = lo - u;
    qp.x_upper.head(nu) = hi - u;
    qp.x_lower.tail(nc).setZero();
    qp.x_upper.tail(nc).setConstant(std::numeric_limits<double>::infinity());

    QPResult qr;
    for (;;) {
      qp.g.tail(nc).setConstant(penalty);
      qr = solve_dense_qp(qp, {1e-9, 500});
      if (qr.x.tail(nc).sum() > 1e-7 && penalty < kMaxPenalty) {
        penalty *= 10.0;
        continue;
      }
      break;
    }
    if (qr.status == QPStatus::Infeasible) break;

    const Eigen::VectorXd step = qr.x.head(nu);
    const Eigen::VectorXd lambda = qr.multipliers.head(nc);
    const double viol_sum = negative_part_sum(ev.constraints);
    const double merit = ev.cost + penalty * viol_sum;
    const double dir_deriv = ev.cost_gradient.dot(step) + penalty * (qr.x.tail(nc).sum() - viol_sum);

    // Stop on a negligible step or a negligible predicted merit decrease.
    if (step.lpNorm<Eigen::Infinity>() <= params.convergence_tol ||
        std::abs(dir_deriv) <= params.convergence_tol * (1.0 + std::abs(merit))) {
      if (problem.violation(ev.constraints) <= params.collision_tol) {
        status = PlannerStatus::Converged;
        break;
      }
    }

    // Backtracking line search on the l1 merit.
    double alpha = 1.0;
    bool accepted = false;
    ShootingProblem::Evaluation trial;
    Eigen::VectorXd u_trial;
    for (int ls = 0; ls < 30; ++ls) {
      u_trial = (u + alpha * step).cwiseMax(lo).cwiseMin(hi);
      trial = problem.evaluate(u_trial, false);
      const double trial_merit = trial.cost + penalty * negative_part_sum(trial.constraints);
      if (trial_merit <= merit + 1e-4 * alpha * std::min(dir_deriv, 0.0)) {
        if (trial_merit <= merit) {
          accepted = true;
          diag.merit_steps.emplace_back(merit, trial_merit);
        }
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Retry once with Gauss-Newton curvature before giving up.
      if (!(hess - ev.gauss_newton).isZero(0.0)) {
        hess = ev.gauss_newton;
        continue;
      }
      if (problem.violation(ev.constraints) <= params.collision_tol)
        status = PlannerStatus::Converged;
      break;
    }

    ShootingProblem::Evaluation next = problem.evaluate(u_trial);
    // Damped BFGS on the Lagrangian gradient.
    const Eigen::VectorXd s = u_trial - u;
    const Eigen::VectorXd grad_l_old = ev.cost_gradient - ev.constraint_jacobian.transpose() * lambda;
    const Eigen::VectorXd grad_l_new = next.cost_gradient - next.constraint_jacobian.transpose() * lambda;
    Eigen::VectorXd y = grad_l_new - grad_l_old;
    const Eigen::VectorXd bs = hess * s;
    const double sbs = s.dot(bs);
    if (sbs > 1e-14) {
      const double sy = s.dot(y);
      if (sy < 0.2 * sbs) {
        const double theta = 0.8 * sbs / (sbs - sy);
        y = theta * y + (1.0 - theta) * bs;
      }
      hess += y * y.transpose() / s.dot(y) - bs * bs.transpose() / sbs;
    }

    const double moved = s.lpNorm<Eigen::Infinity>();
    u = u_trial;
    ev = std::move(next);
    consider(u, ev);
    if (moved <= params.convergence_tol &&
        problem.violation(ev.constraints) <= params.collision_tol) {
      status = PlannerStatus::Converged;
      ++iter;
      break;
    }
  }
  diag.iterations = iter;

  if (problem.violation(ev.constraints) > params.collision_tol) {
    if (!best_u) return finish(u, ev, PlannerStatus::Infeasible);
    u = *best_u;
    ev = problem.evaluate(u, false);
    if (status == PlannerStatus::Converged) status = PlannerStatus::MaxIterations;
  }
  // Report states from the reference integrator so they re-roll exactly.
  ev.states = rollout(x0, unpack(u), dyn);
  return finish(u, ev, status);
}

MpcPlanner::MpcPlanner(PlannerParams params, DynamicsParams dyn) : params_(std::move(params)), dyn_(dyn) {
  validate(params_);
  validate(dyn_);
}

MpcSolution MpcPlanner::plan(const FreeSpaceEstimate& est, const AgentState& x0, const Vec3& goal) {
  MpcSolution sol = solve_mpc(est, x0, goal, params_, dyn_, previous_ ? &*previous_ : nullptr);
  if (sol.diagnostics.status == PlannerStatus::Infeasible)
    previous_.reset();
  else
    previous_ = sol;
  return sol;
}

}  // namespace shplan
