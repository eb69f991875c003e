#include "shplan/geometry.hpp"

#include "shplan/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace shplan {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_azimuth(double phi) {
  if (phi < 0.0) phi += kTwoPi;
  // phi slightly below zero rounds up to exactly 2pi
  if (phi >= kTwoPi) phi = 0.0;
  return phi;
}

Vec3 scaled_to(const Vec3& p, double new_norm) {
  const double n = p.norm();
  if (n == 0.0) return p;
  return p * (new_norm / n);
}
}  // namespace

SphericalPoint cart_to_sph(const Vec3& p) {
  const double r = p.norm();
  if (r == 0.0) return {0.0, 0.0, 0.0};
  const double c = std::clamp(p.z() / r, -1.0, 1.0);
  const double phi = (p.x() == 0.0 && p.y() == 0.0) ? 0.0 : wrap_azimuth(std::atan2(p.y(), p.x()));
  return {r, std::acos(c), phi};
}

Vec3 sph_to_cart(const SphericalPoint& s) {
  const double st = std::sin(s.theta);
  return {s.r * st * std::cos(s.phi), s.r * st * std::sin(s.phi), s.r * std::cos(s.theta)};
}

Vec3 unit_vector(const Direction& d) { return sph_to_cart({1.0, d.theta, d.phi}); }

PointCloud clamp_to_roi(const PointCloud& cloud, double r_roi) {
  if (!(r_roi > 0.0)) throw std::invalid_argument("r_roi must be positive");
  PointCloud out{cloud.points, cloud.frame_origin};
  // points already on the sphere may sit a few ulps outside it
  const double limit = r_roi * (1.0 + 8.0 * std::numeric_limits<double>::epsilon());
  for (auto& p : out.points)
    if (p.norm() > limit) p = scaled_to(p, r_roi);
  return out;
}

PointCloud erode_by_agent_radius(const PointCloud& cloud, double r_a, double eps_r) {
  if (r_a < 0.0) throw std::invalid_argument("agent radius must be non-negative");
  if (!(eps_r > 0.0)) throw std::invalid_argument("eps_r must be positive");
  PointCloud out{cloud.points, cloud.frame_origin};
  if (r_a == 0.0) return out;
  for (auto& p : out.points) {
    p = scaled_to(p, std::max(p.norm() - r_a, eps_r));
    while (p.norm() < eps_r) p *= 1.0 + std::numeric_limits<double>::epsilon();
  }
  return out;
}

PointCloud erode_swept(const PointCloud& cloud, const Directions& probe, double r_a, double cap, double eps_r,
                       double spread) {
  if (r_a < 0.0) throw std::invalid_argument("agent radius must be non-negative");
  if (!(spread >= 0.0)) throw std::invalid_argument("erode_swept: spread must be non-negative");
  if (!(eps_r > 0.0) || !(cap >= eps_r)) throw std::invalid_argument("erode_swept: need 0 < eps_r <= cap");
  const std::vector<double> dist = kernels::swept_distance_omp(cloud.points, probe, r_a, cap, eps_r, spread);
  PointCloud out;
  out.frame_origin = cloud.frame_origin;
  out.points.reserve(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) out.points.push_back(dist[i] * unit_vector(probe[i]));
  return out;
}

PointCloud preprocess_cloud(const PointCloud& cloud, double r_roi, double r_a, double eps_r) {
  return erode_by_agent_radius(clamp_to_roi(cloud, r_roi), r_a, eps_r);
}

double roi_radius(double max_speed, double horizon, double r_a) {
  if (max_speed < 0.0 || horizon < 0.0 || r_a < 0.0)
    throw std::invalid_argument("roi_radius inputs must be non-negative");
  return max_speed * horizon + r_a;
}

Directions fibonacci_directions(int n) {
  if (n < 1) throw std::invalid_argument("fibonacci_directions needs n >= 1");
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  Directions dirs;
  dirs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double phi = std::fmod(golden_angle * i, kTwoPi);
    dirs.push_back({std::acos(std::clamp(z, -1.0, 1.0)), wrap_azimuth(phi)});
  }
  return dirs;
}

}  // namespace shplan
