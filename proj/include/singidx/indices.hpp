#pragma once

// Singularity indices over the manipulability ellipsoid M = J J^T and their
// gradients with respect to the joint coordinates.

#include <type_traits>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "singidx/kinematics.hpp"
#include "singidx/spd.hpp"

namespace singidx {

/// Sphere whose radius tracks the current ellipsoid: Sigma = margin * Tr(M) * I.
struct SphereTrace {
  double margin = 1.0;
};

/// Constant sphere Sigma = k * I.
struct SphereFixed {
  double k = 1.0;
};

/// Reference scaled from the current ellipsoid: Sigma = k * M.
struct ScaledCurrent {
  double k = 2.0;
};

/// Arbitrary constant reference.
struct FixedMatrix {
  SpdMatrix sigma;
};

/// How the reference ellipsoid is produced from the current state.
class ReferenceStrategy {
 public:
  using Variant = std::variant<SphereTrace, SphereFixed, ScaledCurrent, FixedMatrix>;

  /// Throws InvalidArgument when margin < 1, k <= 0 (sphere) or k <= 1
  /// (scaled current; k = 1 makes the index identically zero).
  ReferenceStrategy(Variant v);  // NOLINT(google-explicit-constructor)

  template <class T>
    requires(!std::is_same_v<std::decay_t<T>, Variant> && std::is_constructible_v<Variant, T>)
  ReferenceStrategy(T&& alternative)  // NOLINT(google-explicit-constructor)
      : ReferenceStrategy(Variant(std::forward<T>(alternative))) {}

  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

/// Reference ellipsoid for the current manipulability matrix.
SpdMatrix resolve_reference(const ReferenceStrategy& strategy, const SpdMatrix& m);

/// Sigma^{-1/2} M Sigma^{-1/2}.
struct WhitenedMatrix {
  SpdMatrix value;
};

WhitenedMatrix whiten(const SpdMatrix& m, const SpdMatrix& sigma);

/// xi = || log(Sigma^{-1/2} M Sigma^{-1/2}) ||_F^2, the squared affine-invariant
/// distance between M and Sigma.
double geometry_index(const SpdMatrix& m, const SpdMatrix& sigma);

/// Gradient of xi with respect to q, holding Sigma fixed at the given value.
///
/// d xi / d q_i = 2 Tr(L_log(W, dW_i) log(W)), W = Sigma^{-1/2} M Sigma^{-1/2},
/// dW_i = Sigma^{-1/2} (dJ_i J^T + J dJ_i^T) Sigma^{-1/2},
/// with the Frechet derivative L_log evaluated by frechet_log.
Eigen::VectorXd geometry_index_gradient(const JacobianBundle& bundle, const SpdMatrix& sigma);

/// Closed-form gradient of xi for Sigma = k M0 evaluated at M = M0:
///   d xi / d q_i = -4 ln(k) Tr(dJ_i J^+).
/// Throws RankDeficient if J is not full row rank.
Eigen::VectorXd scaled_current_gradient(const JacobianBundle& bundle, double k);

/// m = sqrt(det(J J^T)), the product of the singular values of J.
double manipulability_index(const Eigen::MatrixXd& jacobian);

/// dm/dq_i = m Tr(dJ_i J^+). Throws RankDeficient if J is not full row rank.
Eigen::VectorXd manipulability_gradient(const JacobianBundle& bundle);

/// sigma_max / sigma_min, or +infinity when sigma_min < kSpdEpsilon * sigma_max.
double dexterity_index(const Eigen::MatrixXd& jacobian);

/// xi_E = || M - Sigma ||_F^2.
double euclidean_index(const SymMatrix& m, const SymMatrix& sigma);

/// d xi_E / d q_i = 2 Tr((M - Sigma)(dJ_i J^T + J dJ_i^T)), Sigma held fixed.
Eigen::VectorXd euclidean_index_gradient(const JacobianBundle& bundle, const SymMatrix& sigma);

/// Moore-Penrose pseudo-inverse; singular values below 1e-10 sigma_max are
/// treated as zero.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a);

/// Singular values of J, descending, zero-padded to J.rows().
Eigen::VectorXd singular_spectrum(const Eigen::MatrixXd& jacobian);

struct IndexReport {
  double xi = 0.0;            // +inf when M is degenerate
  double xi_euclidean = 0.0;
  double manipulability = 0.0;
  double dexterity = 1.0;     // +inf at an exact singularity
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  Eigen::VectorXd spectrum;   // descending

  bool xi_infinite() const;
  bool dexterity_infinite() const;
};

/// Evaluates every index at once. Never throws for a degenerate M; the
/// affected fields are set to +infinity instead.
IndexReport index_report(const JacobianBundle& bundle, const ReferenceStrategy& strategy);
IndexReport index_report(const Eigen::MatrixXd& jacobian, const ReferenceStrategy& strategy);

}  // namespace singidx
