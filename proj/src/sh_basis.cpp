#include "shplan/sh_basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "shplan/kernels.hpp"

namespace shplan {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_direction(double theta, double phi) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    throw std::domain_error("theta out of [0, pi]: " + std::to_string(theta));
  if (!(phi >= 0.0 && phi < kTwoPi))
    throw std::domain_error("phi out of [0, 2pi): " + std::to_string(phi));
}

void check_order(int max_order) {
  if (max_order < 0) throw std::domain_error("max_order must be non-negative");
}

// Fully normalized N(l,m) P_l^m(cos theta) for 0 <= m <= l, stored row-major
// as (l, m) -> l * (l + 1) / 2 + m.
inline int tri(int l, int m) { return l * (l + 1) / 2 + m; }

// Recurrence coefficients shared by value/derivative passes.
inline double rec_a(int l, int m) {
  return std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
}
inline double rec_b(int l, int m) {
  const double lm1 = l - 1.0;
  return std::sqrt((lm1 * lm1 - static_cast<double>(m) * m) / (4.0 * lm1 * lm1 - 1.0));
}

void normalized_legendre(int max_order, double x, double s, double* p) {
  p[0] = std::sqrt(1.0 / (4.0 * std::numbers::pi));
  for (int m = 1; m <= max_order; ++m)
    p[tri(m, m)] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[tri(m - 1, m - 1)];
  for (int m = 0; m < max_order; ++m)
    p[tri(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * p[tri(m, m)];
  for (int m = 0; m <= max_order; ++m)
    for (int l = m + 2; l <= max_order; ++l)
      p[tri(l, m)] = rec_a(l, m) * (x * p[tri(l - 1, m)] - rec_b(l, m) * p[tri(l - 2, m)]);
}

}  // namespace

int flat_index(int l, int m) {
  if (l < 0 || m < -l || m > l)
    throw std::domain_error("invalid harmonic index (l=" + std::to_string(l) +
                            ", m=" + std::to_string(m) + ")");
  return l * l + l + m;
}

HarmonicIndex harmonic_index(int j) {
  if (j < 0) throw std::domain_error("negative flat index");
  const int l = static_cast<int>(std::floor(std::sqrt(static_cast<double>(j))));
  // guard against sqrt rounding at perfect squares
  int ll = l;
  while (ll * ll > j) --ll;
  while ((ll + 1) * (ll + 1) <= j) ++ll;
  return {ll, j - ll * ll - ll};
}

double assoc_legendre(int l, int m, double x) {
  if (m < 0 || m > l) throw std::domain_error("assoc_legendre requires 0 <= m <= l");
  if (!(std::abs(x) <= 1.0)) throw std::domain_error("assoc_legendre requires |x| <= 1");

  // P_m^m = (-1)^m (2m-1)!! (1-x^2)^(m/2)
  double pmm = 1.0;
  const double s = std::sqrt((1.0 - x) * (1.0 + x));
  for (int i = 1; i <= m; ++i) pmm *= -(2.0 * i - 1.0) * s;
  if (l == m) return pmm;

  double pm1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pm1;

  double p_prev = pmm;
  double p_cur = pm1;
  for (int ll = m + 2; ll <= l; ++ll) {
    const double next = ((2.0 * ll - 1.0) * x * p_cur - (ll + m - 1.0) * p_prev) / (ll - m);
    p_prev = p_cur;
    p_cur = next;
  }
  return p_cur;
}

void real_sh_all(int max_order, double theta, double phi, double* out) {
  check_order(max_order);
  check_direction(theta, phi);
  const double x = std::cos(theta);
  const double s = std::sin(theta);

  double stack_buf[153];  // triangular storage up to order 16
  std::vector<double> heap_buf;
  double* p = stack_buf;
  const int tri_size = (max_order + 1) * (max_order + 2) / 2;
  if (tri_size > 153) {
    heap_buf.resize(tri_size);
    p = heap_buf.data();
  }
  normalized_legendre(max_order, x, s, p);

  for (int l = 0; l <= max_order; ++l) {
    const int base = l * l + l;
    out[base] = p[tri(l, 0)];
    for (int m = 1; m <= l; ++m) {
      const double scaled = std::numbers::sqrt2 * p[tri(l, m)];
      out[base + m] = scaled * std::cos(m * phi);
      out[base - m] = scaled * std::sin(m * phi);
    }
  }
}

double real_sh(int l, int m, double theta, double phi) {
  const int j = flat_index(l, m);
  std::vector<double> vals(coefficient_count(l));
  real_sh_all(l, theta, phi, vals.data());
  return vals[j];
}

BasisJet real_sh_jet(int max_order, double theta, double phi) {
  check_order(max_order);
  check_direction(theta, phi);
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  const int n_tri = (max_order + 1) * (max_order + 2) / 2;
  std::vector<double> p(n_tri), dp(n_tri), q(n_tri, 0.0);

  normalized_legendre(max_order, x, s, p.data());

  // d/dtheta of the same recurrence; dx/dtheta = -s, ds/dtheta = x.
  dp[0] = 0.0;
  for (int m = 1; m <= max_order; ++m) {
    const double c = -std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    dp[tri(m, m)] = c * (x * p[tri(m - 1, m - 1)] + s * dp[tri(m - 1, m - 1)]);
    q[tri(m, m)] = c * p[tri(m - 1, m - 1)];
  }
  for (int m = 0; m < max_order; ++m) {
    const double c = std::sqrt(2.0 * m + 3.0);
    dp[tri(m + 1, m)] = c * (-s * p[tri(m, m)] + x * dp[tri(m, m)]);
    q[tri(m + 1, m)] = c * x * q[tri(m, m)];
  }
  for (int m = 0; m <= max_order; ++m) {
    for (int l = m + 2; l <= max_order; ++l) {
      const double a = rec_a(l, m);
      const double b = rec_b(l, m);
      dp[tri(l, m)] = a * (-s * p[tri(l - 1, m)] + x * dp[tri(l - 1, m)] - b * dp[tri(l - 2, m)]);
      q[tri(l, m)] = a * (x * q[tri(l - 1, m)] - b * q[tri(l - 2, m)]);
    }
  }

  const int k = coefficient_count(max_order);
  BasisJet jet{Eigen::VectorXd(k), Eigen::VectorXd(k), Eigen::VectorXd(k)};
  for (int l = 0; l <= max_order; ++l) {
    const int base = l * l + l;
    jet.value[base] = p[tri(l, 0)];
    jet.d_theta[base] = dp[tri(l, 0)];
    jet.d_phi_over_sin[base] = 0.0;
    for (int m = 1; m <= l; ++m) {
      const double c = std::cos(m * phi);
      const double sn = std::sin(m * phi);
      const double r2 = std::numbers::sqrt2;
      jet.value[base + m] = r2 * p[tri(l, m)] * c;
      jet.value[base - m] = r2 * p[tri(l, m)] * sn;
      jet.d_theta[base + m] = r2 * dp[tri(l, m)] * c;
      jet.d_theta[base - m] = r2 * dp[tri(l, m)] * sn;
      jet.d_phi_over_sin[base + m] = -r2 * m * q[tri(l, m)] * sn;
      jet.d_phi_over_sin[base - m] = r2 * m * q[tri(l, m)] * c;
    }
  }
  return jet;
}

RealSHExpansion::RealSHExpansion(int max_order, Eigen::VectorXd weights, Vec3 center)
    : max_order_(max_order), weights_(std::move(weights)), center_(center) {
  check_order(max_order_);
  if (weights_.size() != coefficient_count(max_order_))
    throw std::invalid_argument("expansion needs (max_order+1)^2 weights, got " +
                                std::to_string(weights_.size()));
  if (!weights_.allFinite()) throw std::invalid_argument("expansion weights must be finite");
  if (!center_.allFinite()) throw std::invalid_argument("expansion center must be finite");
}

RealSHExpansion RealSHExpansion::sphere(int max_order, double radius, Vec3 center) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(coefficient_count(max_order));
  w[0] = radius * std::sqrt(4.0 * std::numbers::pi);
  return {max_order, std::move(w), center};
}

double RealSHExpansion::eval_radius(double theta, double phi) const {
  const int k = coefficient_count(max_order_);
  double stack_buf[289];
  std::vector<double> heap_buf;
  double* y = stack_buf;
  if (k > 289) {
    heap_buf.resize(k);
    y = heap_buf.data();
  }
  real_sh_all(max_order_, theta, phi, y);
  double r = 0.0;
  for (int j = 0; j < k; ++j) r += weights_[j] * y[j];
  return r;
}

DesignMatrix design_matrix(const Directions& directions, int max_order) {
  check_order(max_order);
  if (directions.empty()) throw std::invalid_argument("design_matrix needs at least one direction");
  // the kernel runs in a parallel region, where a throw cannot escape
  for (const auto& d : directions) check_direction(d.theta, d.phi);
  DesignMatrix dm;
  dm.max_order = max_order;
  dm.directions = directions;
  dm.values = kernels::design_matrix_omp(directions, max_order);
  return dm;
}

}  // namespace shplan
