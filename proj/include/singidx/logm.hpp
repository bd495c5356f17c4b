#pragma once

// General (non-symmetric) matrix logarithm and the block-matrix identity for
// the Frechet derivative of log. The production gradient path uses
// frechet_log from spd.hpp; these routines exist to check it independently.

#include <Eigen/Dense>

#include "singidx/spd.hpp"

namespace singidx {

struct LogmOptions {
  /// Square roots are taken until ||X - I||_1 falls below this.
  double sqrt_threshold = 0.25;
  /// Budget for the number of square roots.
  int max_square_roots = 60;
  /// Budget for each Denman-Beavers square-root iteration.
  int max_sqrt_iterations = 100;
};

/// Principal square root by the product form of the Denman-Beavers iteration.
/// Throws NonConvergence when the iteration budget is exhausted.
Eigen::MatrixXd general_sqrtm(const Eigen::MatrixXd& a, int max_iterations = 100);

/// Principal logarithm of a matrix with no eigenvalues on the closed negative
/// real axis, by inverse scaling and squaring with a degree-7 Pade
/// approximant of log(1 + x) (Gauss-Legendre partial-fraction form).
Eigen::MatrixXd general_logm(const Eigen::MatrixXd& a, const LogmOptions& opts = {});

/// Upper-right p x p block of log([[P, E], [0, P]]), which equals the
/// Frechet derivative L_log(P, E).
SymMatrix block_log_derivative(const SpdMatrix& p, const SymMatrix& e, const LogmOptions& opts = {});

}  // namespace singidx
