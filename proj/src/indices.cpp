#include "singidx/indices.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "singidx/error.hpp"

namespace singidx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRankTolerance = 1e-10;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::MatrixXd reference_matrix(const ReferenceStrategy& strategy, const Eigen::MatrixXd& m) {
  const auto p = m.rows();
  return std::visit(
      Overloaded{
          [&](const SphereTrace& s) -> Eigen::MatrixXd {
            return s.margin * m.trace() * Eigen::MatrixXd::Identity(p, p);
          },
          [&](const SphereFixed& s) -> Eigen::MatrixXd { return s.k * Eigen::MatrixXd::Identity(p, p); },
          [&](const ScaledCurrent& s) -> Eigen::MatrixXd { return s.k * m; },
          [&](const FixedMatrix& s) -> Eigen::MatrixXd {
            if (s.sigma.dim() != p) throw DimensionMismatch("reference matrix dimension does not match M");
            return s.sigma.matrix();
          },
      },
      strategy.variant());
}

void require_full_row_rank(const Eigen::MatrixXd& j, const char* what) {
  const Eigen::VectorXd s = singular_spectrum(j);
  if (j.rows() > j.cols() || s(0) == 0.0 || s(s.size() - 1) < kRankTolerance * s(0)) {
    throw RankDeficient(std::string(what) + ": Jacobian is not full row rank");
  }
}

// Tr(dJ_i J^+) for every joint.
Eigen::VectorXd log_manipulability_gradient(const JacobianBundle& bundle) {
  const Eigen::MatrixXd pinv = pseudo_inverse(bundle.jacobian);
  Eigen::VectorXd g(bundle.partials.size());
  for (std::size_t i = 0; i < bundle.partials.size(); ++i) {
    g(static_cast<Eigen::Index>(i)) = (bundle.partials[i] * pinv).trace();
  }
  return g;
}

// dM/dq_i = dJ_i J^T + J dJ_i^T
Eigen::MatrixXd manipulability_derivative(const JacobianBundle& bundle, std::size_t i) {
  const Eigen::MatrixXd a = bundle.partials[i] * bundle.jacobian.transpose();
  return a + a.transpose();
}

}  // namespace

ReferenceStrategy::ReferenceStrategy(Variant v) : v_(std::move(v)) {
  std::visit(Overloaded{
                 [](const SphereTrace& s) {
                   if (!(s.margin >= 1.0)) throw InvalidArgument("SphereTrace: margin must be >= 1");
                 },
                 [](const SphereFixed& s) {
                   if (!(s.k > 0.0)) throw InvalidArgument("SphereFixed: k must be > 0");
                 },
                 [](const ScaledCurrent& s) {
                   if (!(s.k > 1.0)) throw InvalidArgument("ScaledCurrent: k must be > 1");
                 },
                 [](const FixedMatrix&) {},
             },
             v_);
}

SpdMatrix resolve_reference(const ReferenceStrategy& strategy, const SpdMatrix& m) {
  return SpdMatrix(reference_matrix(strategy, m.matrix()));
}

WhitenedMatrix whiten(const SpdMatrix& m, const SpdMatrix& sigma) {
  if (m.dim() != sigma.dim()) throw DimensionMismatch("whiten: dimension mismatch");
  const Eigen::MatrixXd r = spd_sqrt_inv(sigma).matrix();
  // Only strict positivity is required of the whitened matrix.
  return WhitenedMatrix{SpdMatrix(SymMatrix(r * m.matrix() * r), 0.0)};
}

double geometry_index(const SpdMatrix& m, const SpdMatrix& sigma) {
  const WhitenedMatrix w = whiten(m, sigma);
  return w.value.eigenvalues().array().log().square().sum();
}

Eigen::VectorXd geometry_index_gradient(const JacobianBundle& bundle, const SpdMatrix& sigma) {
  const SpdMatrix m(bundle.jacobian * bundle.jacobian.transpose());
  if (m.dim() != sigma.dim()) throw DimensionMismatch("geometry_index_gradient: dimension mismatch");
  const Eigen::MatrixXd r = spd_sqrt_inv(sigma).matrix();
  const WhitenedMatrix w = whiten(m, sigma);
  const Eigen::MatrixXd log_w = spd_log(w.value).matrix();

  Eigen::VectorXd g(bundle.partials.size());
  for (std::size_t i = 0; i < bundle.partials.size(); ++i) {
    const SymMatrix dw(r * manipulability_derivative(bundle, i) * r);
    const Eigen::MatrixXd dlog = frechet_log(w.value, dw).matrix();
    // 2 Tr(dlog * log_w^T); both symmetric.
    g(static_cast<Eigen::Index>(i)) = 2.0 * dlog.cwiseProduct(log_w).sum();
  }
  return g;
}

Eigen::VectorXd scaled_current_gradient(const JacobianBundle& bundle, double k) {
  if (!(k > 1.0)) throw InvalidArgument("scaled_current_gradient: k must be > 1");
  require_full_row_rank(bundle.jacobian, "scaled_current_gradient");
  return -4.0 * std::log(k) * log_manipulability_gradient(bundle);
}

double manipulability_index(const Eigen::MatrixXd& jacobian) {
  if (jacobian.rows() > jacobian.cols()) return 0.0;
  return singular_spectrum(jacobian).prod();
}

Eigen::VectorXd manipulability_gradient(const JacobianBundle& bundle) {
  require_full_row_rank(bundle.jacobian, "manipulability_gradient");
  return manipulability_index(bundle.jacobian) * log_manipulability_gradient(bundle);
}

double dexterity_index(const Eigen::MatrixXd& jacobian) {
  const Eigen::VectorXd s = singular_spectrum(jacobian);
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (smax == 0.0 || smin < kSpdEpsilon * smax) return kInf;
  return smax / smin;
}

double euclidean_index(const SymMatrix& m, const SymMatrix& sigma) {
  if (m.dim() != sigma.dim()) throw DimensionMismatch("euclidean_index: dimension mismatch");
  return (m.matrix() - sigma.matrix()).squaredNorm();
}

Eigen::VectorXd euclidean_index_gradient(const JacobianBundle& bundle, const SymMatrix& sigma) {
  const Eigen::MatrixXd m = bundle.jacobian * bundle.jacobian.transpose();
  if (m.rows() != sigma.dim()) throw DimensionMismatch("euclidean_index_gradient: dimension mismatch");
  const Eigen::MatrixXd diff = m - sigma.matrix();
  Eigen::VectorXd g(bundle.partials.size());
  for (std::size_t i = 0; i < bundle.partials.size(); ++i) {
    g(static_cast<Eigen::Index>(i)) = 2.0 * diff.cwiseProduct(manipulability_derivative(bundle, i)).sum();
  }
  return g;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  const double cutoff = s.size() > 0 ? kRankTolerance * s(0) : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::VectorXd singular_spectrum(const Eigen::MatrixXd& jacobian) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(jacobian.rows());
  s.head(svd.singularValues().size()) = svd.singularValues();
  return s;
}

bool IndexReport::xi_infinite() const { return std::isinf(xi); }

bool IndexReport::dexterity_infinite() const { return std::isinf(dexterity); }

IndexReport index_report(const JacobianBundle& bundle, const ReferenceStrategy& strategy) {
  return index_report(bundle.jacobian, strategy);
}

IndexReport index_report(const Eigen::MatrixXd& jacobian, const ReferenceStrategy& strategy) {
  IndexReport r;
  r.spectrum = singular_spectrum(jacobian);
  r.sigma_max = r.spectrum(0);
  r.sigma_min = r.spectrum(r.spectrum.size() - 1);
  r.manipulability = manipulability_index(jacobian);
  r.dexterity = dexterity_index(jacobian);

  const Manipulability m = manipulability_matrix(jacobian);
  const Eigen::MatrixXd sigma = reference_matrix(strategy, m.matrix.matrix());
  r.xi_euclidean = (m.matrix.matrix() - sigma).squaredNorm();
  r.xi = kInf;
  if (!m.degenerate) {
    try {
      r.xi = geometry_index(*m.spd, SpdMatrix(sigma));
    } catch (const DegenerateMatrix&) {
      // reference itself degenerate; leave xi infinite
    }
  }
  return r;
}

}  // namespace singidx
