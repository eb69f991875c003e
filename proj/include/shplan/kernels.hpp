#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a serial reference with
// identical per-element arithmetic, so results match bitwise.

#include <Eigen/Core>
#include <span>
#include <vector>

#include "shplan/box.hpp"
#include "shplan/types.hpp"

namespace shplan::kernels {

Eigen::MatrixXd design_matrix_serial(const Directions& dirs, int max_order);
Eigen::MatrixXd design_matrix_omp(const Directions& dirs, int max_order);

/// First-hit distance per direction, +inf when nothing is hit within max_range.
std::vector<double> cast_rays_serial(const Vec3& origin, const Directions& dirs,
                                     std::span<const BoxObstacle> boxes, double max_range);
std::vector<double> cast_rays_omp(const Vec3& origin, const Directions& dirs,
                                  std::span<const BoxObstacle> boxes, double max_range);

/// Radial field value at each direction for the given weights.
Eigen::VectorXd eval_field_serial(const Eigen::VectorXd& weights, int max_order, const Directions& dirs);
Eigen::VectorXd eval_field_omp(const Eigen::VectorXd& weights, int max_order, const Directions& dirs);

/// Per direction u: min over points p of the first s >= 0 with
/// |s u - p| = r_a + spread |p|, clamped to [eps_r, cap].
std::vector<double> swept_distance_serial(std::span<const Vec3> points, const Directions& dirs, double r_a,
                                          double cap, double eps_r, double spread = 0.0);
std::vector<double> swept_distance_omp(std::span<const Vec3> points, const Directions& dirs, double r_a,
                                       double cap, double eps_r, double spread = 0.0);

}  // namespace shplan::kernels
