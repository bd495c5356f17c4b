#include "singidx/logm.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "singidx/error.hpp"

namespace singidx {

namespace {

constexpr int kPadeDegree = 7;

struct Quadrature {
  std::array<double, kPadeDegree> nodes;    // on [0, 1]
  std::array<double, kPadeDegree> weights;  // sum to 1
};

// Gauss-Legendre rule via the Golub-Welsch eigenvalue problem, mapped to [0, 1].
Quadrature gauss_legendre_unit() {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(kPadeDegree, kPadeDegree);
  for (int k = 1; k < kPadeDegree; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Quadrature q{};
  for (int j = 0; j < kPadeDegree; ++j) {
    const double v0 = es.eigenvectors()(0, j);
    q.nodes[j] = 0.5 * (1.0 + es.eigenvalues()(j));
    q.weights[j] = v0 * v0;  // 2 v0^2 on [-1, 1], halved for [0, 1]
  }
  return q;
}

const Quadrature& pade_rule() {
  static const Quadrature rule = gauss_legendre_unit();
  return rule;
}

// log(I + X) ~ sum_j w_j X (I + t_j X)^{-1}
Eigen::MatrixXd pade_log1p(const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  const auto& rule = pade_rule();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < kPadeDegree; ++j) {
    // X and (I + tX)^{-1} commute, so solve from the right-hand side.
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(id + rule.nodes[j] * x);
    acc += rule.weights[j] * lu.solve(x);
  }
  return acc;
}

}  // namespace

Eigen::MatrixXd general_sqrtm(const Eigen::MatrixXd& a, int max_iterations) {
  if (a.rows() != a.cols()) throw DimensionMismatch("general_sqrtm: matrix is not square");
  const int n = static_cast<int>(a.rows());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd m = a;
  Eigen::MatrixXd y = a;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < max_iterations; ++k) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    const Eigen::MatrixXd m_inv = lu.inverse();
    if (!m_inv.allFinite()) throw NonConvergence("general_sqrtm: singular iterate");
    y = 0.5 * y * (id + m_inv);
    m = 0.5 * (id + 0.5 * (m + m_inv));
    const double res = (m - id).cwiseAbs().sum();
    // Converged, or stalled at rounding level.
    if (res <= 1e-14 * n || (res < 1e-10 && res >= prev)) return y;
    prev = res;
  }
  throw NonConvergence("general_sqrtm: Denman-Beavers iteration did not converge");
}

Eigen::MatrixXd general_logm(const Eigen::MatrixXd& a, const LogmOptions& opts) {
  if (a.rows() != a.cols()) throw DimensionMismatch("general_logm: matrix is not square");
  const int n = static_cast<int>(a.rows());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd x = a;
  int roots = 0;
  // Induced 1-norm: maximum absolute column sum.
  while ((x - id).cwiseAbs().colwise().sum().maxCoeff() >= opts.sqrt_threshold) {
    if (roots == opts.max_square_roots) throw NonConvergence("general_logm: square-root budget exhausted");
    x = general_sqrtm(x, opts.max_sqrt_iterations);
    ++roots;
  }
  return std::ldexp(1.0, roots) * pade_log1p(x - id);
}

SymMatrix block_log_derivative(const SpdMatrix& p, const SymMatrix& e, const LogmOptions& opts) {
  if (p.dim() != e.dim()) throw DimensionMismatch("block_log_derivative: dimension mismatch");
  const int n = p.dim();
  const double e_norm = e.matrix().norm();
  if (e_norm == 0.0) return SymMatrix::zero(n);

  // The derivative is linear in E; rescale E to the size of P before forming
  // the block argument and undo the scaling afterwards.
  const double scale = p.matrix().norm() / e_norm;
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = p.matrix();
  block.bottomRightCorner(n, n) = p.matrix();
  block.topRightCorner(n, n) = scale * e.matrix();

  const Eigen::MatrixXd log_block = general_logm(block, opts);
  return SymMatrix(log_block.topRightCorner(n, n) / scale);
}

}  // namespace singidx
