#pragma once

#include <Eigen/Core>
#include <string_view>

namespace shplan {

/// min 0.5 x'Hx + g'x  s.t.  lower <= Gx <= upper,  x_lower <= x <= x_upper.
/// H must be positive definite. Infinite bounds are allowed.
struct DenseQP {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd G;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd x_lower;
  Eigen::VectorXd x_upper;

  int num_vars() const { return static_cast<int>(g.size()); }
  int num_rows() const { return static_cast<int>(G.rows()); }
};

enum class QPStatus { Optimal, MaxIterations, Infeasible };
std::string_view to_string(QPStatus s);

struct QPSettings {
  double tol = 1e-6;
  int max_iter = 500;
};

struct QPResult {
  QPStatus status = QPStatus::Infeasible;
  Eigen::VectorXd x;
  /// One multiplier per general row followed by one per variable bound.
  /// Positive: lower side active. Negative: upper side active.
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  double max_violation = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
};

/// Largest bound violation of x over all rows and variable bounds.
double max_violation(const DenseQP& qp, const Eigen::VectorXd& x);

/// Dual active-set method (Goldfarb-Idnani): starts at the unconstrained
/// minimizer and repeatedly adds the most violated constraint, dropping active
/// ones whose multipliers would turn negative. Factorizations are updated with
/// Givens rotations. Ties go to the lowest row index, so runs are deterministic.
/// Iterations count added plus dropped constraints.
QPResult solve_dense_qp(const DenseQP& qp, const QPSettings& settings = {});

}  // namespace shplan
