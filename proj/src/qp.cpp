#include "shplan/qp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace shplan {

std::string_view to_string(QPStatus s) {
  switch (s) {
    case QPStatus::Optimal: return "optimal";
    case QPStatus::MaxIterations: return "max_iterations";
    case QPStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

enum class Side { Lower, Upper };

struct Active {
  int row;  // general rows first, then variable bounds
  Side side;
};

// Constraint normal in the ">=" orientation.
Eigen::VectorXd normal(const DenseQP& qp, const Active& a) {
  Eigen::VectorXd n;
  if (a.row < qp.num_rows()) {
    n = qp.G.row(a.row).transpose();
  } else {
    n = Eigen::VectorXd::Zero(qp.num_vars());
    n[a.row - qp.num_rows()] = 1.0;
  }
  if (a.side == Side::Upper) n = -n;
  return n;
}

void validate(const DenseQP& qp) {
  const int n = qp.num_vars();
  const int m = qp.num_rows();
  if (qp.H.rows() != n || qp.H.cols() != n) throw std::invalid_argument("QP: H shape mismatch");
  if (m > 0 && qp.G.cols() != n) throw std::invalid_argument("QP: G column mismatch");
  if (qp.lower.size() != m || qp.upper.size() != m) throw std::invalid_argument("QP: row bound size mismatch");
  if (qp.x_lower.size() != n || qp.x_upper.size() != n) throw std::invalid_argument("QP: variable bound size mismatch");
}

}  // namespace

double max_violation(const DenseQP& qp, const Eigen::VectorXd& x) {
  double v = 0.0;
  if (qp.num_rows() > 0) {
    const Eigen::VectorXd gx = qp.G * x;
    for (int i = 0; i < qp.num_rows(); ++i) v = std::max({v, qp.lower[i] - gx[i], gx[i] - qp.upper[i]});
  }
  for (int j = 0; j < qp.num_vars(); ++j) v = std::max({v, qp.x_lower[j] - x[j], x[j] - qp.x_upper[j]});
  return v;
}

QPResult solve_dense_qp(const DenseQP& qp, const QPSettings& settings) {
  validate(qp);
  const int n = qp.num_vars();
  const int m = qp.num_rows();
  const int total = m + n;

  QPResult res;
  res.multipliers = Eigen::VectorXd::Zero(total);

  const Eigen::LLT<Eigen::MatrixXd> chol(qp.H);
  if (chol.info() != Eigen::Success) throw std::invalid_argument("QP: H is not positive definite");

  // J = L^-T Q, R upper triangular with [R; 0] = J' N for active normals N.
  Eigen::MatrixXd J = chol.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  std::vector<Active> active;
  std::vector<double> u;
  std::vector<char> is_active(total, 0);

  Eigen::VectorXd x = -chol.solve(qp.g);

  std::vector<double> row_norm(total, 1.0);
  for (int r = 0; r < m; ++r) row_norm[r] = std::max(qp.G.row(r).norm(), 1e-300);

  auto slack = [&](const Active& a, const Eigen::VectorXd& gx) {
    double ax, lo, hi;
    if (a.row < m) {
      ax = gx[a.row];
      lo = qp.lower[a.row];
      hi = qp.upper[a.row];
    } else {
      ax = x[a.row - m];
      lo = qp.x_lower[a.row - m];
      hi = qp.x_upper[a.row - m];
    }
    return a.side == Side::Lower ? ax - lo : hi - ax;
  };

  auto drop = [&](int k) {
    const int q = static_cast<int>(active.size());
    for (int c = k; c < q - 1; ++c) R.col(c) = R.col(c + 1);
    R.col(q - 1).setZero();
    for (int j = k; j < q - 1; ++j) {
      const double a = R(j, j), b = R(j + 1, j);
      const double h = std::hypot(a, b);
      if (h == 0.0) continue;
      const double c = a / h, s = b / h;
      for (int col = j; col < q - 1; ++col) {
        const double r1 = R(j, col), r2 = R(j + 1, col);
        R(j, col) = c * r1 + s * r2;
        R(j + 1, col) = -s * r1 + c * r2;
      }
      const Eigen::VectorXd j1 = J.col(j), j2 = J.col(j + 1);
      J.col(j) = c * j1 + s * j2;
      J.col(j + 1) = -s * j1 + c * j2;
    }
    is_active[active[k].row] = 0;
    active.erase(active.begin() + k);
    u.erase(u.begin() + k);
  };

  const double feas_tol = std::min(settings.tol * 1e-3, 1e-9);
  int iter = 0;
  res.status = QPStatus::MaxIterations;
  bool done = false;
  while (!done && iter < settings.max_iter) {
    // Most violated constraint, scaled by row norm.
    const Eigen::VectorXd gx = m > 0 ? Eigen::VectorXd(qp.G * x) : Eigen::VectorXd();
    Active p{-1, Side::Lower};
    double worst = -feas_tol;
    for (int r = 0; r < total; ++r) {
      if (is_active[r]) continue;
      for (Side side : {Side::Lower, Side::Upper}) {
        const Active cand{r, side};
        const double s = slack(cand, gx) / row_norm[r];
        if (s < worst) {
          worst = s;
          p = cand;
        }
      }
    }
    if (p.row < 0) {
      res.status = QPStatus::Optimal;
      break;
    }
    const Eigen::VectorXd np = normal(qp, p);
    double u_p = 0.0;

    for (;;) {
      if (iter >= settings.max_iter) break;
      ++iter;
      const int q = static_cast<int>(active.size());
      const Eigen::VectorXd d = J.transpose() * np;
      const Eigen::VectorXd z = J.rightCols(n - q) * d.tail(n - q);
      Eigen::VectorXd r(q);
      if (q > 0) r = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

      double t1 = std::numeric_limits<double>::infinity();
      int k = -1;
      for (int j = 0; j < q; ++j) {
        if (r[j] > 0.0) {
          const double ratio = u[j] / r[j];
          if (ratio < t1) {
            t1 = ratio;
            k = j;
          }
        }
      }
      const double zn = z.dot(np);
      const bool z_zero = std::abs(zn) <= 1e-14 * np.squaredNorm();
      if (z_zero) {
        if (k < 0) {
          res.status = QPStatus::Infeasible;
          done = true;
          break;
        }
        for (int j = 0; j < q; ++j) u[j] -= t1 * r[j];
        u_p += t1;
        drop(k);
        continue;
      }
      const Eigen::VectorXd gx_now = m > 0 ? Eigen::VectorXd(qp.G * x) : Eigen::VectorXd();
      const double s_p = slack(p, gx_now);
      const double t2 = std::max(0.0, -s_p / zn);
      const double t = std::min(t1, t2);
      x += t * z;
      for (int j = 0; j < q; ++j) u[j] -= t * r[j];
      u_p += t;
      if (t2 <= t1) {
        // Add p: rotate d so that only its first q+1 entries are non-zero.
        Eigen::VectorXd dd = d;
        for (int i = n - 1; i > q; --i) {
          const double a = dd[i - 1], b = dd[i];
          if (b == 0.0) continue;
          const double h = std::hypot(a, b);
          const double c = a / h, s = b / h;
          dd[i - 1] = h;
          dd[i] = 0.0;
          const Eigen::VectorXd j1 = J.col(i - 1), j2 = J.col(i);
          J.col(i - 1) = c * j1 + s * j2;
          J.col(i) = -s * j1 + c * j2;
        }
        R.col(q).head(q + 1) = dd.head(q + 1);
        active.push_back(p);
        u.push_back(u_p);
        is_active[p.row] = 1;
        break;
      }
      drop(k);
    }
  }
  res.iterations = iter;
  res.x = x;
  for (std::size_t i = 0; i < active.size(); ++i)
    res.multipliers[active[i].row] = active[i].side == Side::Lower ? u[i] : -u[i];
  Eigen::VectorXd resid = qp.H * x + qp.g;
  if (m > 0) resid -= qp.G.transpose() * res.multipliers.head(m);
  resid -= res.multipliers.tail(n);
  res.stationarity = resid.lpNorm<Eigen::Infinity>();
  res.objective = 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
  res.max_violation = max_violation(qp, x);
  return res;
}

}  // namespace shplan
