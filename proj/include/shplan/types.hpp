#pragma once

#include <Eigen/Core>
#include <vector>

namespace shplan {

using Vec3 = Eigen::Vector3d;

// Unit direction on the sphere: polar angle from +z and azimuth from +x.
struct Direction {
  double theta = 0.0;  // [0, pi]
  double phi = 0.0;    // [0, 2pi)
};

using Directions = std::vector<Direction>;

}  // namespace shplan
