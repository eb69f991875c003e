#pragma once

#include <vector>

#include "shplan/types.hpp"

namespace shplan {

struct SphericalPoint {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

/// Cartesian points in the agent-centered frame.
struct PointCloud {
  std::vector<Vec3> points;
  Vec3 frame_origin = Vec3::Zero();
};

/// The origin maps to (0, 0, 0); phi is wrapped into [0, 2pi).
SphericalPoint cart_to_sph(const Vec3& p);
Vec3 sph_to_cart(const SphericalPoint& s);
inline Direction direction_of(const SphericalPoint& s) { return {s.theta, s.phi}; }
Vec3 unit_vector(const Direction& d);

/// Points beyond r_roi are projected radially onto the ROI sphere.
PointCloud clamp_to_roi(const PointCloud& cloud, double r_roi);

/// Shrinks every point's radius by r_a, floored at eps_r. Direction is kept.
PointCloud erode_by_agent_radius(const PointCloud& cloud, double r_a, double eps_r);

/// For every probe direction, the farthest distance (capped at `cap`, floored
/// at eps_r) a sphere of radius r_a can travel from the origin before touching
/// any measured point. Returns one point per probe direction, so directions
/// without a return are constrained too. Each point's clearance radius grows by
/// spread times its range, covering surface that falls between rays.
PointCloud erode_swept(const PointCloud& cloud, const Directions& probe, double r_a, double cap, double eps_r,
                       double spread = 0.0);

/// clamp_to_roi followed by erode_by_agent_radius.
PointCloud preprocess_cloud(const PointCloud& cloud, double r_roi, double r_a, double eps_r);

/// Farthest the agent can reach within the horizon plus its own radius.
double roi_radius(double max_speed, double horizon, double r_a);

/// Fibonacci spiral lattice; z is sampled at cell midpoints so neither pole
/// is hit exactly.
Directions fibonacci_directions(int n);

}  // namespace shplan
