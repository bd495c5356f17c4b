#pragma once

// Geometry of the cone of symmetric positive-definite matrices under the
// affine-invariant metric.

#include <Eigen/Dense>

namespace singidx {

/// Default floor below which an eigenvalue is treated as zero.
inline constexpr double kSpdEpsilon = 1e-10;

/// Dense symmetric matrix. The input is symmetrized as (X + X^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(int dim);
  static SymMatrix zero(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

/// Symmetric positive-definite matrix with its eigensystem cached at
/// construction. Construction throws DegenerateMatrix when the smallest
/// eigenvalue is not above `epsilon`.
class SpdMatrix {
 public:
  explicit SpdMatrix(const SymMatrix& base, double epsilon = kSpdEpsilon);
  explicit SpdMatrix(const Eigen::MatrixXd& m, double epsilon = kSpdEpsilon)
      : SpdMatrix(SymMatrix(m), epsilon) {}

  static SpdMatrix identity(int dim) { return SpdMatrix(SymMatrix::identity(dim)); }

  int dim() const { return base_.dim(); }
  const SymMatrix& sym() const { return base_; }
  const Eigen::MatrixXd& matrix() const { return base_.matrix(); }

  /// Smallest eigenvalue.
  double eigen_floor() const { return eigenvalues_(0); }
  /// Ascending eigenvalues and matching orthonormal eigenvectors (columns).
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }

 private:
  SymMatrix base_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// S^{-1/2}.
SpdMatrix spd_sqrt_inv(const SpdMatrix& s);

/// Principal logarithm, computed on the eigenbasis.
SymMatrix spd_log(const SpdMatrix& s);

/// d(Sigma, Lambda) = || log(Sigma^{-1/2} Lambda Sigma^{-1/2}) ||_F
double affine_distance(const SpdMatrix& sigma, const SpdMatrix& lambda);

/// <Z1, Z2>_Sigma = Tr(Sigma^{-1/2} Z1 Sigma^{-1} Z2 Sigma^{-1/2})
double riemannian_inner(const SymMatrix& z1, const SymMatrix& z2, const SpdMatrix& sigma);

/// Frechet derivative of the matrix logarithm at P in direction E,
/// d/dt log(P + tE) at t = 0.
///
/// Uses the Daleckii-Krein formula: with P = V diag(l) V^T,
///   L(P, E) = V (F o (V^T E V)) V^T,
///   F_ij = (log l_i - log l_j) / (l_i - l_j), F_ii = 1 / l_i.
/// Eigenvalue pairs closer than 1e-8 relative use the diagonal limit.
SymMatrix frechet_log(const SpdMatrix& p, const SymMatrix& e);

/// Congruence action A * X * A^T.
Eigen::MatrixXd congruence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x);

}  // namespace singidx
