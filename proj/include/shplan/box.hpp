#pragma once

#include <optional>

#include "shplan/types.hpp"

namespace shplan {

/// Axis-aligned box obstacle.
struct BoxObstacle {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
};

/// Slab test. Nearest non-negative hit distance along a unit direction;
/// 0 when the origin is inside or on the box.
std::optional<double> ray_box_intersect(const Vec3& origin, const Vec3& dir, const BoxObstacle& box);

/// Euclidean distance from p to the box surface, negative inside.
double box_signed_distance(const Vec3& p, const BoxObstacle& box);

}  // namespace shplan
