#include "singidx/spd.hpp"

#include <cmath>
#include <sstream>

#include "singidx/error.hpp"

namespace singidx {

namespace {

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionMismatch(os.str());
  }
}

Eigen::MatrixXd from_eigensystem(const Eigen::MatrixXd& v, const Eigen::VectorXd& d) {
  Eigen::MatrixXd r = v * d.asDiagonal() * v.transpose();
  return 0.5 * (r + r.transpose());
}

// Eigenvalues of the whitened pair Sigma^{-1/2} Lambda Sigma^{-1/2}.
Eigen::VectorXd whitened_eigenvalues(const SpdMatrix& sigma, const SpdMatrix& lambda) {
  const Eigen::MatrixXd r = spd_sqrt_inv(sigma).matrix();
  const SymMatrix w(r * lambda.matrix() * r);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NonConvergence("affine_distance: eigensolver failed");
  if (es.eigenvalues()(0) <= 0.0) throw DegenerateMatrix("affine_distance: whitened matrix is not positive-definite");
  return es.eigenvalues();
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("SymMatrix: matrix is not square");
  if (m.rows() < 1) throw InvalidArgument("SymMatrix: empty matrix");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int dim) { return SymMatrix(Eigen::MatrixXd::Identity(dim, dim)); }

SymMatrix SymMatrix::zero(int dim) { return SymMatrix(Eigen::MatrixXd::Zero(dim, dim)); }

SpdMatrix::SpdMatrix(const SymMatrix& base, double epsilon) : base_(base) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base_.matrix());
  if (es.info() != Eigen::Success) throw NonConvergence("SpdMatrix: eigensolver failed");
  if (!(es.eigenvalues()(0) > epsilon)) {
    std::ostringstream os;
    os << "SpdMatrix: smallest eigenvalue " << es.eigenvalues()(0) << " is not above " << epsilon;
    throw DegenerateMatrix(os.str());
  }
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
}

SpdMatrix spd_sqrt_inv(const SpdMatrix& s) {
  const Eigen::VectorXd d = s.eigenvalues().cwiseSqrt().cwiseInverse();
  // Eigenvalues of the result can drop below the default floor when s is
  // large; the result is still SPD by construction.
  return SpdMatrix(SymMatrix(from_eigensystem(s.eigenvectors(), d)), 0.0);
}

SymMatrix spd_log(const SpdMatrix& s) {
  const Eigen::VectorXd d = s.eigenvalues().array().log().matrix();
  return SymMatrix(from_eigensystem(s.eigenvectors(), d));
}

double affine_distance(const SpdMatrix& sigma, const SpdMatrix& lambda) {
  require_same_dim(sigma.dim(), lambda.dim(), "affine_distance");
  return whitened_eigenvalues(sigma, lambda).array().log().matrix().norm();
}

double riemannian_inner(const SymMatrix& z1, const SymMatrix& z2, const SpdMatrix& sigma) {
  require_same_dim(z1.dim(), sigma.dim(), "riemannian_inner");
  require_same_dim(z2.dim(), sigma.dim(), "riemannian_inner");
  const Eigen::MatrixXd r = spd_sqrt_inv(sigma).matrix();
  const Eigen::MatrixXd a = r * z1.matrix() * r;
  const Eigen::MatrixXd b = r * z2.matrix() * r;
  // Tr(R Z1 R R Z2 R) with R R = Sigma^{-1}.
  return (a.array() * b.transpose().array()).sum();
}

SymMatrix frechet_log(const SpdMatrix& p, const SymMatrix& e) {
  require_same_dim(p.dim(), e.dim(), "frechet_log");
  const int n = p.dim();
  const Eigen::VectorXd& l = p.eigenvalues();
  const Eigen::MatrixXd& v = p.eigenvectors();

  Eigen::MatrixXd f(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double diff = l(i) - l(j);
      if (std::abs(diff) < 1e-8 * std::max(l(i), l(j))) {
        f(i, j) = 1.0 / l(i);
      } else {
        // log(l_i / l_j) via log1p keeps accuracy for nearby eigenvalues.
        f(i, j) = std::log1p(diff / l(j)) / diff;
      }
    }
  }
  const Eigen::MatrixXd et = v.transpose() * e.matrix() * v;
  return SymMatrix(v * f.cwiseProduct(et) * v.transpose());
}

Eigen::MatrixXd congruence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x) {
  if (a.cols() != x.rows() || x.rows() != x.cols()) throw DimensionMismatch("congruence: shape mismatch");
  return a * x * a.transpose();
}

}  // namespace singidx
