#pragma once

#include <Eigen/Core>

#include "shplan/geometry.hpp"
#include "shplan/qp.hpp"
#include "shplan/sh_basis.hpp"

namespace shplan {

/// Constrained least squares over harmonic weights x:
///   min |Ax - b|^2  s.t.  0 <= Cx <= d,  0 <= Ax <= b,  h_lb <= x <= h_ub.
/// A holds the soft (sphere-shaping) directions, C the measured directions.
struct FreeSpaceQP {
  int max_order = 0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd C;
  Eigen::VectorXd d;
  Eigen::VectorXd h_lb;
  Eigen::VectorXd h_ub;
};

FreeSpaceQP build_qp(const PointCloud& measured, const Directions& soft_dirs, double r, int max_order,
                     double weight_cap_factor = 4.0);

/// Same problem in the generic form: rows are soft rows first, then measured rows.
DenseQP to_dense(const FreeSpaceQP& qp);

struct SolveDiagnostics {
  QPStatus status = QPStatus::Infeasible;
  double objective = 0.0;  // |Ax - b|^2
  double max_violation = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
};

struct FreeSpaceSolution {
  Eigen::VectorXd weights;
  SolveDiagnostics diagnostics;
};

FreeSpaceSolution solve_qp(const FreeSpaceQP& qp, double tol = 1e-6, int max_iter = 500);

struct EstimationParams {
  int max_order = 4;
  int soft_dir_count = 1000;
  double weight_cap_factor = 4.0;
  double tol = 1e-6;
  int max_iter = 500;
  /// Free-space radius r (max travel within the horizon); the ROI is r + r_a.
  double free_radius = 2.0;
};

struct FreeSpaceEstimate {
  RealSHExpansion expansion;
  double roi_radius = 0.0;
  SolveDiagnostics diagnostics;
};

/// Points must already be clamped and eroded. Expansion center is the
/// cloud's frame origin.
FreeSpaceEstimate estimate_freespace(const PointCloud& measured, const EstimationParams& params);

/// Within this distance of the center the direction is undefined; the field
/// value along +z is used instead.
inline constexpr double kCenterEps = 1e-3;

/// Field radius toward p minus p's distance from the center.
double signed_clearance(const FreeSpaceEstimate& est, const Vec3& p);

/// Clearance and its gradient with respect to the world point. The gradient is
/// zero within kCenterEps of the center.
struct ClearanceJet {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
};
ClearanceJet signed_clearance_jet(const FreeSpaceEstimate& est, const Vec3& p);

}  // namespace shplan
