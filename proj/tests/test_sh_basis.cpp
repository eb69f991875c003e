#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "oracles/quadrature.hpp"
#include "oracles/rodrigues.hpp"
#include "shplan/geometry.hpp"
#include "shplan/sh_basis.hpp"

using namespace shplan;

namespace {
const double kY00 = std::sqrt(1.0 / (4.0 * M_PI));

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }
}  // namespace

TEST_CASE("assoc_legendre examples") {
  CHECK(assoc_legendre(0, 0, 0.3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(assoc_legendre(1, 0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(assoc_legendre(1, 1, 0.0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("assoc_legendre matches the Rodrigues oracle for l <= 6") {
  double worst = 0.0;
  for (int l = 0; l <= 6; ++l) {
    for (int m = 0; m <= l; ++m) {
      for (int i = 0; i <= 100; ++i) {
        const double x = -1.0 + 2.0 * i / 100.0;
        const double got = assoc_legendre(l, m, x);
        const double want = oracle::rodrigues_legendre(l, m, x);
        worst = std::max(worst, rel_err(got, want));
      }
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("assoc_legendre domain errors") {
  CHECK_THROWS_AS(assoc_legendre(1, 2, 0.0), std::domain_error);
  CHECK_THROWS_AS(assoc_legendre(2, 1, 1.5), std::domain_error);
  CHECK_THROWS_AS(assoc_legendre(2, -1, 0.0), std::domain_error);
}

TEST_CASE("real_sh examples") {
  CHECK(real_sh(0, 0, 0.7, 2.1) == doctest::Approx(kY00).epsilon(1e-14));
  CHECK(real_sh(0, 0, 0.7, 2.1) == doctest::Approx(0.282095).epsilon(1e-6));
  CHECK(real_sh(1, 0, 0.0, 0.0) == doctest::Approx(std::sqrt(3.0 / (4.0 * M_PI))).epsilon(1e-14));
  CHECK(real_sh(1, 0, 0.0, 0.0) == doctest::Approx(0.488603).epsilon(1e-6));
  CHECK(std::abs(real_sh(2, -1, M_PI / 2, 0.0)) < 1e-15);
}

TEST_CASE("real_sh matches the oracle basis on random directions") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.0, M_PI), up(0.0, 2.0 * M_PI);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double t = ut(rng), p = up(rng);
    for (int l = 0; l <= 6; ++l)
      for (int m = -l; m <= l; ++m) worst = std::max(worst, std::abs(real_sh(l, m, t, p) - oracle::rodrigues_real_sh(l, m, t, p)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("real_sh domain errors") {
  CHECK_THROWS_AS(real_sh(1, 2, 0.5, 0.5), std::domain_error);
  CHECK_THROWS_AS(real_sh(1, 0, -0.1, 0.5), std::domain_error);
  CHECK_THROWS_AS(real_sh(1, 0, 0.5, 2.0 * M_PI), std::domain_error);
  CHECK_THROWS_AS(real_sh(1, 0, M_PI + 1e-9, 0.5), std::domain_error);
}

TEST_CASE("flat_index examples and bijection") {
  CHECK(flat_index(0, 0) == 0);
  CHECK(flat_index(1, -1) == 1);
  CHECK(flat_index(4, 4) == 24);
  CHECK_THROWS_AS(flat_index(2, 3), std::domain_error);
  CHECK_THROWS_AS(flat_index(-1, 0), std::domain_error);

  for (int lmax = 0; lmax <= 8; ++lmax) {
    std::set<int> seen;
    for (int l = 0; l <= lmax; ++l) {
      for (int m = -l; m <= l; ++m) {
        const int j = flat_index(l, m);
        CHECK(j >= 0);
        CHECK(j < coefficient_count(lmax));
        seen.insert(j);
        const HarmonicIndex hi = harmonic_index(j);
        CHECK(hi.l == l);
        CHECK(hi.m == m);
      }
    }
    CHECK(static_cast<int>(seen.size()) == coefficient_count(lmax));
  }
}

TEST_CASE("orthonormality under Gauss-Legendre quadrature") {
  const int lmax = 4;
  const int k = coefficient_count(lmax);
  const auto nodes = oracle::sphere_rule(12, 24);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  std::vector<double> y(k);
  for (const auto& nd : nodes) {
    real_sh_all(lmax, nd.theta, nd.phi, y.data());
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) gram(a, b) += nd.weight * y[a] * y[b];
  }
  CHECK((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("design_matrix shapes and entries") {
  const DesignMatrix one = design_matrix({{0.3, 1.2}}, 0);
  REQUIRE(one.values.rows() == 1);
  REQUIRE(one.values.cols() == 1);
  CHECK(one.values(0, 0) == doctest::Approx(0.282095).epsilon(1e-6));

  const Directions three{{0.1, 0.2}, {1.5, 3.0}, {2.9, 6.0}};
  const DesignMatrix d1 = design_matrix(three, 1);
  REQUIRE(d1.values.rows() == 3);
  REQUIRE(d1.values.cols() == 4);
  for (int i = 0; i < 3; ++i) CHECK(d1.values(i, 0) == doctest::Approx(kY00).epsilon(1e-14));

  const Directions fib = fibonacci_directions(10);
  const DesignMatrix d4 = design_matrix(fib, 4);
  CHECK(d4.values.rows() == 10);
  CHECK(d4.values.cols() == 25);
  for (int i = 0; i < 10; ++i)
    for (int l = 0; l <= 4; ++l)
      for (int m = -l; m <= l; ++m)
        CHECK(d4.values(i, flat_index(l, m)) == real_sh(l, m, fib[i].theta, fib[i].phi));

  CHECK_THROWS_AS(design_matrix({{-0.5, 0.0}}, 2), std::domain_error);
}

TEST_CASE("Gram matrix of a dense Fibonacci design approaches identity") {
  const int n = 20000;
  const DesignMatrix d = design_matrix(fibonacci_directions(n), 4);
  const Eigen::MatrixXd gram = (4.0 * M_PI / n) * d.values.transpose() * d.values;
  CHECK((gram - Eigen::MatrixXd::Identity(25, 25)).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("eval_radius examples") {
  const RealSHExpansion zero(4, Eigen::VectorXd::Zero(25));
  CHECK(zero.eval_radius(1.0, 2.0) == 0.0);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(25);
  w[0] = 5.0 * std::sqrt(4.0 * M_PI);
  const RealSHExpansion ball(4, w);
  for (double t : {0.0, 0.4, 1.7, M_PI})
    for (double p : {0.0, 1.0, 5.5}) CHECK(ball.eval_radius(t, p) == doctest::Approx(5.0).epsilon(1e-14));

  const RealSHExpansion s = RealSHExpansion::sphere(3, 2.5);
  CHECK(s.weights().size() == 16);
  CHECK(s.eval_radius(0.3, 0.3) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("eval_radius equals the design-row dot product") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Directions dirs = fibonacci_directions(300);
  for (int lmax : {0, 2, 4, 7}) {
    Eigen::VectorXd w(coefficient_count(lmax));
    for (auto& x : w) x = nd(rng);
    const RealSHExpansion e(lmax, w);
    const DesignMatrix d = design_matrix(dirs, lmax);
    const Eigen::VectorXd dot = d.values * w;
    double worst = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i)
      worst = std::max(worst, std::abs(e.eval_radius(dirs[i].theta, dirs[i].phi) - dot[static_cast<long>(i)]));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("expansion invariants are enforced") {
  CHECK_THROWS_AS(RealSHExpansion(2, Eigen::VectorXd::Zero(8)), std::invalid_argument);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  w[2] = std::nan("");
  CHECK_THROWS_AS(RealSHExpansion(1, w), std::invalid_argument);
}

TEST_CASE("basis jet matches finite differences and stays finite at the poles") {
  const int lmax = 4;
  const double h = 1e-6;
  for (double t : {0.3, 1.2, 2.5}) {
    for (double p : {0.4, 3.3}) {
      const BasisJet jet = real_sh_jet(lmax, t, p);
      for (int j = 0; j < coefficient_count(lmax); ++j) {
        const HarmonicIndex hi = harmonic_index(j);
        const double dt = (real_sh(hi.l, hi.m, t + h, p) - real_sh(hi.l, hi.m, t - h, p)) / (2 * h);
        const double dp = (real_sh(hi.l, hi.m, t, p + h) - real_sh(hi.l, hi.m, t, p - h)) / (2 * h);
        CHECK(jet.value[j] == doctest::Approx(real_sh(hi.l, hi.m, t, p)).epsilon(1e-13));
        CHECK(std::abs(jet.d_theta[j] - dt) < 1e-7);
        CHECK(std::abs(jet.d_phi_over_sin[j] * std::sin(t) - dp) < 1e-7);
      }
    }
  }
  for (double t : {0.0, M_PI}) {
    const BasisJet jet = real_sh_jet(lmax, t, 1.0);
    CHECK(jet.value.allFinite());
    CHECK(jet.d_theta.allFinite());
    CHECK(jet.d_phi_over_sin.allFinite());
  }
}
