#pragma once

// Dense convex QP with equality constraints and box bounds:
//
//   minimize    1/2 x^T W x + w^T x
//   subject to  J x = xdot,  lower <= x <= upper.

#include <vector>

#include <Eigen/Dense>

namespace singidx {

struct QpProblem {
  Eigen::MatrixXd weight;   // n x n, symmetric positive-definite
  Eigen::VectorXd linear;   // n
  Eigen::MatrixXd eq_matrix;  // p x n, p <= n
  Eigen::VectorXd eq_rhs;   // p
  Eigen::VectorXd lower;    // n, may hold -inf
  Eigen::VectorXd upper;    // n, may hold +inf

  int num_vars() const { return static_cast<int>(weight.rows()); }
  int num_eq() const { return static_cast<int>(eq_matrix.rows()); }

  /// Throws DimensionMismatch or InvalidArgument when the invariants fail.
  void validate() const;
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

const char* to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd qdot;
  QpStatus status = QpStatus::MaxIterations;
  double kkt_residual = 0.0;
  /// Variables held at a bound by the final working set.
  std::vector<int> active_set;
  int iterations = 0;
};

inline constexpr double kQpTolerance = 1e-8;

/// Dual active-set method of Goldfarb and Idnani. Starts from the
/// unconstrained minimizer, adds the equalities, then repeatedly adds the
/// most violated bound, dropping bounds whose multipliers would turn
/// negative. Infeasibility is reported when a violated bound can be added
/// neither by a primal nor by a dual step.
///
/// Throws IllConditioned if J is rank-deficient beyond 1e-10 relative.
QpSolution solve_qp(const QpProblem& problem, double tol = kQpTolerance);

/// Largest violation among primal feasibility, stationarity and
/// complementarity at x. Multipliers are recovered by sign-constrained least
/// squares over the equality rows and the bounds active at x.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x);

}  // namespace singidx
