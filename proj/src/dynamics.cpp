#include "shplan/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shplan {

namespace {

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat84 = Eigen::Matrix<double, 8, 4>;

struct RhsJet {
  StateVec f;
  Mat8 fx;
  Mat84 fu;
};

RhsJet rhs_jet(const StateVec& x, const InputVec& u, const DynamicsParams& prm) {
  RhsJet j;
  j.f = dynamics_rhs(x, u, prm);
  j.fx.setZero();
  j.fu.setZero();
  const double c = std::cos(x[3]), s = std::sin(x[3]);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  Eigen::Matrix3d dr;
  dr << -s, -c, 0, c, -s, 0, 0, 0, 0;
  j.fx.block<3, 1>(0, 3) = dr * x.segment<3>(4);
  j.fx.block<3, 3>(0, 4) = r;
  j.fx(3, 7) = 1.0;
  j.fx.block<3, 3>(4, 4) = -Eigen::Matrix3d::Identity() / prm.tau;
  j.fx(7, 7) = -1.0 / prm.tau_psi;
  j.fu.block<3, 3>(4, 0) = Eigen::Matrix3d::Identity() * (prm.k / prm.tau);
  j.fu(7, 3) = prm.k_psi / prm.tau_psi;
  return j;
}

int substep_count(const DynamicsParams& prm) {
  return std::max(1, static_cast<int>(std::ceil(prm.dt / prm.max_substep - 1e-9)));
}

}  // namespace

StateVec to_vector(const AgentState& s) {
  StateVec x;
  x << s.p, s.psi, s.v, s.psi_dot;
  return x;
}

AgentState from_vector(const StateVec& x) {
  return {x.segment<3>(0), x[3], x.segment<3>(4), x[7]};
}

InputVec to_vector(const ControlInput& u) {
  InputVec v;
  v << u.u_v, u.u_psi;
  return v;
}

ControlInput input_from_vector(const InputVec& u) { return {u.head<3>(), u[3]}; }

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::remainder(a, two_pi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

Eigen::Matrix3d heading_rotation(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

void validate(const DynamicsParams& p) {
  if (!(p.tau > 0.0) || !(p.tau_psi > 0.0) || !(p.dt > 0.0) || !(p.max_substep > 0.0))
    throw std::invalid_argument("dynamics: tau, tau_psi, dt and max_substep must be positive");
  if ((p.process_noise_std.array() < 0.0).any())
    throw std::invalid_argument("dynamics: process noise std must be non-negative");
}

StateVec dynamics_rhs(const StateVec& x, const InputVec& u, const DynamicsParams& prm) {
  StateVec f;
  f.segment<3>(0) = heading_rotation(x[3]) * x.segment<3>(4);
  f[3] = x[7];
  f.segment<3>(4) = (-x.segment<3>(4) + prm.k * u.head<3>()) / prm.tau;
  f[7] = (-x[7] + prm.k_psi * u[3]) / prm.tau_psi;
  return f;
}

StepJacobian dynamics_step_jacobian(const StateVec& x0, const InputVec& u, const DynamicsParams& prm) {
  const int n = substep_count(prm);
  const double h = prm.dt / n;
  StepJacobian out;
  StateVec x = x0;
  Mat8 dx = Mat8::Identity();
  Mat84 du = Mat84::Zero();
  for (int i = 0; i < n; ++i) {
    const RhsJet k1 = rhs_jet(x, u, prm);
    const Mat8 k1x = k1.fx * dx;
    const Mat84 k1u = k1.fx * du + k1.fu;

    const RhsJet k2 = rhs_jet(x + 0.5 * h * k1.f, u, prm);
    const Mat8 k2x = k2.fx * (dx + 0.5 * h * k1x);
    const Mat84 k2u = k2.fx * (du + 0.5 * h * k1u) + k2.fu;

    const RhsJet k3 = rhs_jet(x + 0.5 * h * k2.f, u, prm);
    const Mat8 k3x = k3.fx * (dx + 0.5 * h * k2x);
    const Mat84 k3u = k3.fx * (du + 0.5 * h * k2u) + k3.fu;

    const RhsJet k4 = rhs_jet(x + h * k3.f, u, prm);
    const Mat8 k4x = k4.fx * (dx + h * k3x);
    const Mat84 k4u = k4.fx * (du + h * k3u) + k4.fu;

    x += (h / 6.0) * (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f);
    dx += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    du += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  }
  x[3] = wrap_angle(x[3]);
  out.next = x;
  out.dx = dx;
  out.du = du;
  return out;
}

AgentState dynamics_step(const AgentState& s, const ControlInput& uin, const DynamicsParams& prm,
                         std::mt19937_64* rng) {
  validate(prm);
  const int n = substep_count(prm);
  const double h = prm.dt / n;
  StateVec x = to_vector(s);
  const InputVec u = to_vector(uin);
  for (int i = 0; i < n; ++i) {
    const StateVec k1 = dynamics_rhs(x, u, prm);
    const StateVec k2 = dynamics_rhs(x + 0.5 * h * k1, u, prm);
    const StateVec k3 = dynamics_rhs(x + 0.5 * h * k2, u, prm);
    const StateVec k4 = dynamics_rhs(x + h * k3, u, prm);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (rng != nullptr && (prm.process_noise_std.array() > 0.0).any()) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 8; ++i)
      if (prm.process_noise_std[i] > 0.0) x[i] += prm.process_noise_std[i] * normal(*rng);
  }
  x[3] = wrap_angle(x[3]);
  return from_vector(x);
}

}  // namespace shplan
