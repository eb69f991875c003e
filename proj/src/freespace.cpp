#include "shplan/freespace.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace shplan {

FreeSpaceQP build_qp(const PointCloud& measured, const Directions& soft_dirs, double r, int max_order,
                     double weight_cap_factor) {
  if (soft_dirs.empty()) throw std::invalid_argument("build_qp: soft direction set is empty");
  if (!(r > 0.0)) throw std::invalid_argument("build_qp: radius must be positive");
  if (!(weight_cap_factor > 0.0)) throw std::invalid_argument("build_qp: weight_cap_factor must be positive");

  const int k = coefficient_count(max_order);
  FreeSpaceQP qp;
  qp.max_order = max_order;
  qp.A = design_matrix(soft_dirs, max_order).values;
  qp.b = Eigen::VectorXd::Constant(static_cast<long>(soft_dirs.size()), r);

  Directions hard_dirs;
  hard_dirs.reserve(measured.points.size());
  qp.d.resize(static_cast<long>(measured.points.size()));
  for (std::size_t i = 0; i < measured.points.size(); ++i) {
    const SphericalPoint s = cart_to_sph(measured.points[i]);
    hard_dirs.push_back(direction_of(s));
    qp.d[static_cast<long>(i)] = s.r;
  }
  qp.C = hard_dirs.empty() ? Eigen::MatrixXd(0, k) : design_matrix(hard_dirs, max_order).values;

  qp.h_ub = Eigen::VectorXd::Constant(k, weight_cap_factor * r);
  qp.h_lb = -qp.h_ub;
  return qp;
}

DenseQP to_dense(const FreeSpaceQP& fq) {
  const long n_soft = fq.A.rows();
  const long n_hard = fq.C.rows();
  const long k = fq.A.cols();
  DenseQP qp;
  // |Ax - b|^2 = x'A'Ax - 2b'Ax + b'b
  qp.H = 2.0 * fq.A.transpose() * fq.A;
  qp.g = -2.0 * fq.A.transpose() * fq.b;
  qp.G.resize(n_soft + n_hard, k);
  qp.G.topRows(n_soft) = fq.A;
  if (n_hard > 0) qp.G.bottomRows(n_hard) = fq.C;
  qp.lower = Eigen::VectorXd::Zero(n_soft + n_hard);
  qp.upper.resize(n_soft + n_hard);
  qp.upper.head(n_soft) = fq.b;
  if (n_hard > 0) qp.upper.tail(n_hard) = fq.d;
  qp.x_lower = fq.h_lb;
  qp.x_upper = fq.h_ub;
  return qp;
}

FreeSpaceSolution solve_qp(const FreeSpaceQP& fq, double tol, int max_iter) {
  const auto t0 = std::chrono::steady_clock::now();
  const DenseQP qp = to_dense(fq);
  const long k = fq.A.cols();
  if (fq.A.rows() < k)
    throw std::invalid_argument("solve_qp: need at least (max_order+1)^2 soft directions");

  QPResult r = solve_dense_qp(qp, {tol, max_iter});

  FreeSpaceSolution sol;
  sol.weights = r.x;
  sol.diagnostics.status = r.status;
  sol.diagnostics.objective = (fq.A * r.x - fq.b).squaredNorm();
  sol.diagnostics.max_violation = r.max_violation;
  sol.diagnostics.stationarity = r.stationarity;
  sol.diagnostics.iterations = r.iterations;
  sol.diagnostics.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

FreeSpaceEstimate estimate_freespace(const PointCloud& measured, const EstimationParams& params) {
  const Directions soft = fibonacci_directions(params.soft_dir_count);
  const FreeSpaceQP qp = build_qp(measured, soft, params.free_radius, params.max_order, params.weight_cap_factor);
  FreeSpaceSolution sol = solve_qp(qp, params.tol, params.max_iter);
  if (sol.diagnostics.status == QPStatus::Infeasible)
    throw std::runtime_error("estimate_freespace: constraints are infeasible");
  FreeSpaceEstimate est;
  est.expansion = RealSHExpansion(params.max_order, std::move(sol.weights), measured.frame_origin);
  est.roi_radius = params.free_radius;
  est.diagnostics = sol.diagnostics;
  return est;
}

double signed_clearance(const FreeSpaceEstimate& est, const Vec3& p) {
  const Vec3 q = p - est.expansion.center();
  const SphericalPoint s = cart_to_sph(q);
  if (s.r < kCenterEps) return est.expansion.eval_radius(0.0, 0.0) - s.r;
  return est.expansion.eval_radius(s.theta, s.phi) - s.r;
}

ClearanceJet signed_clearance_jet(const FreeSpaceEstimate& est, const Vec3& p) {
  const Vec3 q = p - est.expansion.center();
  const SphericalPoint s = cart_to_sph(q);
  ClearanceJet out;
  if (s.r < kCenterEps) {
    out.value = est.expansion.eval_radius(0.0, 0.0) - s.r;
    return out;
  }
  const BasisJet jet = real_sh_jet(est.expansion.max_order(), s.theta, s.phi);
  const Eigen::VectorXd& w = est.expansion.weights();
  const double radius = w.dot(jet.value);
  const double dr_dtheta = w.dot(jet.d_theta);
  const double dr_dphi_over_sin = w.dot(jet.d_phi_over_sin);

  const double ct = std::cos(s.theta), st = std::sin(s.theta);
  const double cp = std::cos(s.phi), sp = std::sin(s.phi);
  const Vec3 e_r(st * cp, st * sp, ct);
  const Vec3 e_theta(ct * cp, ct * sp, -st);
  const Vec3 e_phi(-sp, cp, 0.0);
  out.value = radius - s.r;
  out.gradient = (dr_dtheta * e_theta + dr_dphi_over_sin * e_phi) / s.r - e_r;
  return out;
}

}  // namespace shplan
