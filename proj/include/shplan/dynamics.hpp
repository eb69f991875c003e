#pragma once

#include <Eigen/Core>
#include <random>

#include "shplan/types.hpp"

namespace shplan {

struct AgentState {
  Vec3 p = Vec3::Zero();  // world position [m]
  double psi = 0.0;       // heading [rad], wrapped to (-pi, pi]
  Vec3 v = Vec3::Zero();  // body-frame velocity [m/s]
  double psi_dot = 0.0;   // heading rate [rad/s]
};

struct ControlInput {
  Vec3 u_v = Vec3::Zero();  // commanded body velocity [m/s]
  double u_psi = 0.0;       // commanded heading rate [rad/s]
};

struct DynamicsParams {
  double tau = 0.3;
  double k = 1.0;
  double tau_psi = 0.3;
  double k_psi = 1.0;
  double dt = 0.5;
  /// RK4 sub-step ceiling; dt is split into ceil(dt / max_substep) equal steps.
  double max_substep = 0.02;
  /// Zero-mean Gaussian noise std added after integration, ordered as the
  /// state vector (px, py, pz, psi, vx, vy, vz, psi_dot).
  Eigen::Matrix<double, 8, 1> process_noise_std = Eigen::Matrix<double, 8, 1>::Zero();
};

using StateVec = Eigen::Matrix<double, 8, 1>;
using InputVec = Eigen::Matrix<double, 4, 1>;

StateVec to_vector(const AgentState& s);
AgentState from_vector(const StateVec& x);
InputVec to_vector(const ControlInput& u);
ControlInput input_from_vector(const InputVec& u);

double wrap_angle(double a);

/// Rotation about world z by psi (body -> world).
Eigen::Matrix3d heading_rotation(double psi);

void validate(const DynamicsParams& params);

/// Continuous dynamics: p' = R(psi) v, psi' = psi_dot,
/// v' = (-v + k u_v) / tau, psi_dot' = (-psi_dot + k_psi u_psi) / tau_psi.
StateVec dynamics_rhs(const StateVec& x, const InputVec& u, const DynamicsParams& params);

/// One RK4-integrated step of length dt with zero-order-hold input. Noise is
/// applied only when an rng is supplied and the noise std is non-zero.
AgentState dynamics_step(const AgentState& x, const ControlInput& u, const DynamicsParams& params,
                         std::mt19937_64* rng = nullptr);

/// Noise-free step together with d(next)/d(state) and d(next)/d(input).
struct StepJacobian {
  StateVec next;
  Eigen::Matrix<double, 8, 8> dx;
  Eigen::Matrix<double, 8, 4> du;
};
StepJacobian dynamics_step_jacobian(const StateVec& x, const InputVec& u, const DynamicsParams& params);

}  // namespace shplan
