#include "shplan/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shplan/geometry.hpp"
#include "shplan/sh_basis.hpp"

namespace shplan::kernels {

namespace {

inline void fill_row(Eigen::MatrixXd& out, const Directions& dirs, int max_order, long i,
                     std::vector<double>& scratch) {
  real_sh_all(max_order, dirs[i].theta, dirs[i].phi, scratch.data());
  for (long j = 0; j < out.cols(); ++j) out(i, j) = scratch[j];
}

inline double first_hit(const Vec3& origin, const Direction& d, std::span<const BoxObstacle> boxes,
                        double max_range) {
  const Vec3 u = unit_vector(d);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& box : boxes) {
    if (auto t = ray_box_intersect(origin, u, box); t && *t < best) best = *t;
  }
  return best <= max_range ? best : std::numeric_limits<double>::infinity();
}

inline double field_at(const Eigen::VectorXd& w, int max_order, const Direction& d,
                       std::vector<double>& scratch) {
  real_sh_all(max_order, d.theta, d.phi, scratch.data());
  double r = 0.0;
  for (long j = 0; j < w.size(); ++j) r += w[j] * scratch[j];
  return r;
}

inline double swept_one(std::span<const Vec3> points, const Direction& d, double r_a, double cap, double eps_r,
                        double spread) {
  const Vec3 u = unit_vector(d);
  double s = cap;
  for (const auto& p : points) {
    const double rad = r_a + spread * p.norm();
    const double ra2 = rad * rad;
    const double along = p.dot(u);
    const double perp2 = p.squaredNorm() - along * along;
    if (perp2 >= ra2) continue;
    const double hit = along - std::sqrt(ra2 - perp2);
    if (along + std::sqrt(ra2 - perp2) < 0.0) continue;  // point entirely behind
    if (hit < s) s = hit;
  }
  return std::max(s, eps_r);
}

}  // namespace

Eigen::MatrixXd design_matrix_serial(const Directions& dirs, int max_order) {
  const long n = static_cast<long>(dirs.size());
  Eigen::MatrixXd out(n, coefficient_count(max_order));
  std::vector<double> scratch(coefficient_count(max_order));
  for (long i = 0; i < n; ++i) fill_row(out, dirs, max_order, i, scratch);
  return out;
}

Eigen::MatrixXd design_matrix_omp(const Directions& dirs, int max_order) {
  const long n = static_cast<long>(dirs.size());
  Eigen::MatrixXd out(n, coefficient_count(max_order));
#pragma omp parallel
  {
    std::vector<double> scratch(coefficient_count(max_order));
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) fill_row(out, dirs, max_order, i, scratch);
  }
  return out;
}

std::vector<double> cast_rays_serial(const Vec3& origin, const Directions& dirs,
                                     std::span<const BoxObstacle> boxes, double max_range) {
  std::vector<double> hits(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) hits[i] = first_hit(origin, dirs[i], boxes, max_range);
  return hits;
}

std::vector<double> cast_rays_omp(const Vec3& origin, const Directions& dirs,
                                  std::span<const BoxObstacle> boxes, double max_range) {
  const long n = static_cast<long>(dirs.size());
  std::vector<double> hits(dirs.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) hits[i] = first_hit(origin, dirs[i], boxes, max_range);
  return hits;
}

Eigen::VectorXd eval_field_serial(const Eigen::VectorXd& weights, int max_order, const Directions& dirs) {
  const long n = static_cast<long>(dirs.size());
  Eigen::VectorXd out(n);
  std::vector<double> scratch(coefficient_count(max_order));
  for (long i = 0; i < n; ++i) out[i] = field_at(weights, max_order, dirs[i], scratch);
  return out;
}

Eigen::VectorXd eval_field_omp(const Eigen::VectorXd& weights, int max_order, const Directions& dirs) {
  const long n = static_cast<long>(dirs.size());
  Eigen::VectorXd out(n);
#pragma omp parallel
  {
    std::vector<double> scratch(coefficient_count(max_order));
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) out[i] = field_at(weights, max_order, dirs[i], scratch);
  }
  return out;
}

std::vector<double> swept_distance_serial(std::span<const Vec3> points, const Directions& dirs, double r_a,
                                          double cap, double eps_r, double spread) {
  std::vector<double> out(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) out[i] = swept_one(points, dirs[i], r_a, cap, eps_r, spread);
  return out;
}

std::vector<double> swept_distance_omp(std::span<const Vec3> points, const Directions& dirs, double r_a,
                                       double cap, double eps_r, double spread) {
  const long n = static_cast<long>(dirs.size());
  std::vector<double> out(dirs.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = swept_one(points, dirs[i], r_a, cap, eps_r, spread);
  return out;
}

}  // namespace shplan::kernels
