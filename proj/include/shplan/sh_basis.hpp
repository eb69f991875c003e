#pragma once

#include <Eigen/Core>
#include <vector>

#include "shplan/types.hpp"

namespace shplan {

/// (l, m) pair of a real spherical harmonic, |m| <= l.
struct HarmonicIndex {
  int l = 0;
  int m = 0;
};

/// Number of coefficients for orders 0..max_order inclusive.
constexpr int coefficient_count(int max_order) { return (max_order + 1) * (max_order + 1); }

/// l^2 + l + m. Throws std::domain_error when |m| > l or l < 0.
int flat_index(int l, int m);

/// Inverse of flat_index.
HarmonicIndex harmonic_index(int j);

/// Unnormalized associated Legendre function P_l^m(x) with the Condon-Shortley
/// phase, computed by upward recurrence in l.
double assoc_legendre(int l, int m, double x);

/// Real orthonormal spherical harmonic: cos branch for m > 0, sin branch for
/// m < 0, both scaled by sqrt(2).
double real_sh(int l, int m, double theta, double phi);

/// Evaluates every real harmonic up to max_order at one direction. `out` must
/// hold coefficient_count(max_order) entries and is indexed by flat_index.
void real_sh_all(int max_order, double theta, double phi, double* out);

/// Values and angular derivatives of all harmonics at one direction.
/// `d_phi_over_sin` holds (1/sin theta) dY/dphi, which stays finite at the poles.
struct BasisJet {
  Eigen::VectorXd value;
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_phi_over_sin;
};
BasisJet real_sh_jet(int max_order, double theta, double phi);

/// Radius field r(theta, phi) = sum_j weight_j * Y_j(theta, phi) around `center`.
class RealSHExpansion {
 public:
  RealSHExpansion() = default;
  RealSHExpansion(int max_order, Eigen::VectorXd weights, Vec3 center = Vec3::Zero());

  /// Sphere of the given radius: only the l = 0 weight is non-zero.
  static RealSHExpansion sphere(int max_order, double radius, Vec3 center = Vec3::Zero());

  int max_order() const { return max_order_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Vec3& center() const { return center_; }

  double eval_radius(double theta, double phi) const;

 private:
  int max_order_ = 0;
  Eigen::VectorXd weights_ = Eigen::VectorXd::Zero(1);
  Vec3 center_ = Vec3::Zero();
};

/// Rows are directions, columns are flat harmonic indices.
struct DesignMatrix {
  int max_order = 0;
  Directions directions;
  Eigen::MatrixXd values;
};

DesignMatrix design_matrix(const Directions& directions, int max_order);

}  // namespace shplan
