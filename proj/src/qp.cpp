#include "singidx/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "singidx/error.hpp"

namespace singidx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Constraint ids: [0, p) equalities, then for each variable i
// p + 2i (x_i >= lower_i) and p + 2i + 1 (-x_i >= -upper_i).
class ConstraintSet {
 public:
  explicit ConstraintSet(const QpProblem& qp) : qp_(qp), p_(qp.num_eq()) {}

  int count() const { return p_ + 2 * qp_.num_vars(); }
  bool is_equality(int id) const { return id < p_; }
  int variable(int id) const { return (id - p_) / 2; }
  bool is_upper(int id) const { return ((id - p_) % 2) == 1; }

  Eigen::VectorXd normal(int id) const {
    if (is_equality(id)) return qp_.eq_matrix.row(id).transpose();
    Eigen::VectorXd n = Eigen::VectorXd::Zero(qp_.num_vars());
    n(variable(id)) = is_upper(id) ? -1.0 : 1.0;
    return n;
  }

  double rhs(int id) const {
    if (is_equality(id)) return qp_.eq_rhs(id);
    return is_upper(id) ? -qp_.upper(variable(id)) : qp_.lower(variable(id));
  }

  bool present(int id) const { return std::isfinite(rhs(id)); }

  double slack(int id, const Eigen::VectorXd& x) const {
    if (is_equality(id)) return qp_.eq_matrix.row(id).dot(x) - rhs(id);
    const int i = variable(id);
    return is_upper(id) ? qp_.upper(i) - x(i) : x(i) - qp_.lower(i);
  }

 private:
  const QpProblem& qp_;
  int p_;
};

struct Step {
  Eigen::VectorXd z;  // primal direction
  Eigen::VectorXd r;  // multiplier change per unit dual step
  bool dependent = false;
};

// Works in the whitened space L^{-1} n, where G = L L^T, so the component of
// np outside the active span comes from an orthogonal projection rather than
// a cancelling Schur complement.
Step compute_step(const Eigen::LLT<Eigen::MatrixXd>& llt, const ConstraintSet& cs, const std::vector<int>& active,
                  const Eigen::VectorXd& np) {
  const auto n_vars = np.size();
  const auto m = static_cast<Eigen::Index>(active.size());
  const Eigen::VectorXd np_w = llt.matrixL().solve(np);
  Step s;
  s.r = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd perp = np_w;
  if (m > 0) {
    Eigen::MatrixXd n(n_vars, m);
    for (Eigen::Index k = 0; k < m; ++k) n.col(k) = cs.normal(active[static_cast<std::size_t>(k)]);
    const Eigen::MatrixXd n_w = llt.matrixL().solve(n);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(n_w);
    const Eigen::MatrixXd q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n_vars, m);
    const Eigen::VectorXd coeff = q1.transpose() * np_w;
    s.r = qr.matrixQR().topLeftCorner(m, m).triangularView<Eigen::Upper>().solve(coeff);
    perp = np_w - q1 * coeff;
  }
  s.dependent = m >= n_vars || perp.norm() <= 1e-10 * np_w.norm();
  if (s.dependent) perp.setZero();
  s.z = llt.matrixU().solve(perp);
  return s;
}

// Lawson-Hanson: minimize ||A x - b|| subject to x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index m = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
  if (m == 0) return x;
  std::vector<bool> passive(m, false);
  const double tol = 1e-14 * std::max(1.0, a.norm() * b.norm());

  for (int outer = 0; outer < 3 * static_cast<int>(m) + 3; ++outer) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!passive[j] && w(j) > tol && (best < 0 || w(j) > w(best))) best = j;
    }
    if (best < 0) break;
    passive[best] = true;

    for (int inner = 0; inner < 3 * static_cast<int>(m) + 3; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[j]) idx.push_back(j);
      }
      Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
      const Eigen::VectorXd sp = ap.completeOrthogonalDecomposition().solve(b);
      Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
      for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(static_cast<Eigen::Index>(k));

      if (sp.size() == 0 || sp.minCoeff() > 0.0) {
        x = s;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j : idx) {
        if (s(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - s(j)));
      }
      x += alpha * (s - x);
      for (Eigen::Index j : idx) {
        if (x(j) <= 1e-15) {
          x(j) = 0.0;
          passive[j] = false;
        }
      }
    }
  }
  return x;
}

// Re-solves the equality-constrained problem on the final working set in
// null-space form. The dual iterates start from -W^{-1} w, which cancels
// badly when |w| dwarfs the solution; this pass avoids that cancellation.
std::optional<Eigen::VectorXd> polish(const QpProblem& qp, const Eigen::VectorXd& x, const std::vector<int>& at_bound) {
  const int n = qp.num_vars();
  const int p = qp.num_eq();
  std::vector<int> free_idx;
  Eigen::VectorXd fixed = Eigen::VectorXd::Zero(n);
  std::vector<bool> is_fixed(static_cast<std::size_t>(n), false);
  for (int i : at_bound) {
    is_fixed[static_cast<std::size_t>(i)] = true;
    fixed(i) = std::abs(x(i) - qp.lower(i)) <= std::abs(x(i) - qp.upper(i)) ? qp.lower(i) : qp.upper(i);
  }
  for (int i = 0; i < n; ++i) {
    if (!is_fixed[static_cast<std::size_t>(i)]) free_idx.push_back(i);
  }
  const int f = static_cast<int>(free_idx.size());
  if (f < p || f == 0) return std::nullopt;

  Eigen::MatrixXd jf(p, f), gff(f, f);
  Eigen::VectorXd lin(f);
  for (int a = 0; a < f; ++a) {
    jf.col(a) = qp.eq_matrix.col(free_idx[static_cast<std::size_t>(a)]);
    lin(a) = qp.linear(free_idx[static_cast<std::size_t>(a)]) +
             qp.weight.row(free_idx[static_cast<std::size_t>(a)]).dot(fixed);
    for (int b = 0; b < f; ++b) {
      gff(a, b) = qp.weight(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
    }
  }
  const Eigen::VectorXd rhs = qp.eq_rhs - qp.eq_matrix * fixed;

  Eigen::VectorXd xf;
  if (p == 0) {
    xf = gff.llt().solve(-lin);
  } else {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(jf.transpose());
    const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    if (r.diagonal().cwiseAbs().minCoeff() <= 1e-12 * r.diagonal().cwiseAbs().maxCoeff()) return std::nullopt;
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(f, f);
    const Eigen::VectorXd xp =
        q.leftCols(p) * r.transpose().triangularView<Eigen::Lower>().solve(rhs);
    xf = xp;
    if (f > p) {
      const Eigen::MatrixXd z = q.rightCols(f - p);
      const Eigen::VectorXd step = (z.transpose() * gff * z).llt().solve(-z.transpose() * (gff * xp + lin));
      xf = xp + z * step;
    }
  }
  Eigen::VectorXd out = fixed;
  for (int a = 0; a < f; ++a) out(free_idx[static_cast<std::size_t>(a)]) = xf(a);
  return out;
}

}  // namespace

void QpProblem::validate() const {
  const auto n = weight.rows();
  if (weight.cols() != n || linear.size() != n || eq_matrix.cols() != n || lower.size() != n ||
      upper.size() != n || eq_rhs.size() != eq_matrix.rows()) {
    throw DimensionMismatch("QpProblem: inconsistent shapes");
  }
  if (n == 0) throw InvalidArgument("QpProblem: no variables");
  if (eq_matrix.rows() > n) throw InvalidArgument("QpProblem: more equality rows than variables");
  if (!(weight - weight.transpose()).isZero(1e-12 * std::max(1.0, weight.norm()))) {
    throw InvalidArgument("QpProblem: weight is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(weight, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 1e-12)) throw InvalidArgument("QpProblem: weight is not positive-definite");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lower(i) <= upper(i))) throw InvalidArgument("QpProblem: lower bound exceeds upper bound");
  }
}

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIterations: return "max_iterations";
  }
  return "?";
}

QpSolution solve_qp(const QpProblem& problem, double tol) {
  problem.validate();
  const int n = problem.num_vars();
  const int p = problem.num_eq();

  if (p > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(problem.eq_matrix);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s(0) == 0.0 || s(s.size() - 1) < 1e-10 * s(0)) {
      std::ostringstream os;
      os << "solve_qp: equality matrix is rank-deficient (sigma_min / sigma_max = "
         << (s(0) == 0.0 ? 0.0 : s(s.size() - 1) / s(0)) << ")";
      throw IllConditioned(os.str());
    }
  }

  const ConstraintSet cs(problem);
  const Eigen::LLT<Eigen::MatrixXd> llt(problem.weight);

  QpSolution sol;
  Eigen::VectorXd x = -llt.solve(problem.linear);
  std::vector<int> active;
  std::vector<double> u;

  // Equalities first; their multipliers are free in sign and never dropped.
  for (int k = 0; k < p; ++k) {
    const Eigen::VectorXd np = cs.normal(k);
    const Step st = compute_step(llt, cs, active, np);
    if (st.dependent) throw IllConditioned("solve_qp: dependent equality rows");
    const double t = -cs.slack(k, x) / st.z.dot(np);
    x += t * st.z;
    for (std::size_t a = 0; a < active.size(); ++a) u[a] -= t * st.r(static_cast<Eigen::Index>(a));
    active.push_back(k);
    u.push_back(t);
  }

  const int budget = 10 * n;
  auto finish = [&](QpStatus status) {
    sol.qdot = x;
    sol.status = status;
    for (int id : active) {
      if (!cs.is_equality(id)) sol.active_set.push_back(cs.variable(id));
    }
    std::sort(sol.active_set.begin(), sol.active_set.end());
    sol.kkt_residual = kkt_residual(problem, x);
    if (status == QpStatus::Optimal && sol.kkt_residual > 0.0) {
      if (const auto refined = polish(problem, x, sol.active_set)) {
        const double r = kkt_residual(problem, *refined);
        if (r < sol.kkt_residual) {
          sol.qdot = *refined;
          sol.kkt_residual = r;
        }
      }
    }
    return sol;
  };

  while (true) {
    // Most violated inactive bound.
    int add = -1;
    double worst = 0.0;
    for (int id = p; id < cs.count(); ++id) {
      if (!cs.present(id) || std::find(active.begin(), active.end(), id) != active.end()) continue;
      const double s = cs.slack(id, x);
      const double threshold = -1e-3 * tol * std::max(1.0, std::abs(cs.rhs(id)));
      if (s < threshold && s < worst) {
        worst = s;
        add = id;
      }
    }
    if (add < 0) return finish(QpStatus::Optimal);

    const Eigen::VectorXd np = cs.normal(add);
    double u_add = 0.0;
    while (true) {
      if (sol.iterations >= budget) return finish(QpStatus::MaxIterations);
      ++sol.iterations;

      const Step st = compute_step(llt, cs, active, np);
      // Largest dual step keeping active bound multipliers non-negative.
      double t_dual = kInf;
      std::size_t drop = active.size();
      for (std::size_t a = 0; a < active.size(); ++a) {
        const double r = st.r(static_cast<Eigen::Index>(a));
        if (cs.is_equality(active[a]) || r <= 0.0) continue;
        const double ratio = u[a] / r;
        if (ratio < t_dual) {
          t_dual = ratio;
          drop = a;
        }
      }
      const double t_primal = st.dependent ? kInf : -cs.slack(add, x) / st.z.dot(np);
      const double t = std::min(t_dual, t_primal);
      if (!std::isfinite(t)) return finish(QpStatus::Infeasible);

      if (std::isfinite(t_primal)) x += t * st.z;
      for (std::size_t a = 0; a < active.size(); ++a) u[a] -= t * st.r(static_cast<Eigen::Index>(a));
      u_add += t;

      if (t_primal <= t_dual) {
        active.push_back(add);
        u.push_back(u_add);
        break;
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }
}

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x) {
  const int n = problem.num_vars();
  const int p = problem.num_eq();
  if (x.size() != n) throw DimensionMismatch("kkt_residual: x has the wrong length");

  double primal = p > 0 ? (problem.eq_matrix * x - problem.eq_rhs).cwiseAbs().maxCoeff() : 0.0;
  for (int i = 0; i < n; ++i) {
    primal = std::max({primal, problem.lower(i) - x(i), x(i) - problem.upper(i)});
  }

  // Bounds considered active at x, as signed columns: +e_i for an upper bound
  // and -e_i for a lower bound, each with a non-negative multiplier, so that
  //   -(W x + w) = J^T lambda + sum_k mu_k c_k.
  std::vector<Eigen::VectorXd> cols;
  std::vector<double> slacks;
  for (int i = 0; i < n; ++i) {
    const double lo_slack = x(i) - problem.lower(i);
    const double hi_slack = problem.upper(i) - x(i);
    if (std::isfinite(problem.lower(i)) && lo_slack <= 1e-9 * std::max(1.0, std::abs(problem.lower(i)))) {
      cols.push_back(-Eigen::VectorXd::Unit(n, i));
      slacks.push_back(std::max(lo_slack, 0.0));
    }
    if (std::isfinite(problem.upper(i)) && hi_slack <= 1e-9 * std::max(1.0, std::abs(problem.upper(i)))) {
      cols.push_back(Eigen::VectorXd::Unit(n, i));
      slacks.push_back(std::max(hi_slack, 0.0));
    }
  }
  Eigen::MatrixXd c(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) c.col(static_cast<Eigen::Index>(k)) = cols[k];

  const Eigen::VectorXd b = -(problem.weight * x + problem.linear);

  // Remove the free equality multipliers by projecting onto null(J). The
  // stationarity residual is that projection itself; recovering lambda
  // explicitly would lose accuracy when J is nearly singular.
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(c.cols());
  double stationarity = 0.0;
  if (p < n) {
    Eigen::MatrixXd basis;
    if (p == 0) {
      basis = Eigen::MatrixXd::Identity(n, n);
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(problem.eq_matrix.transpose());
      const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
      basis = q.rightCols(n - p);
    }
    if (c.cols() > 0) {
      // Bounds within tolerance but not exactly active also pay mu * slack, so
      // degenerate vertices do not load multipliers onto them.
      const Eigen::Index k = c.cols();
      Eigen::MatrixXd a(n - p + k, k);
      a.topRows(n - p) = basis.transpose() * c;
      a.bottomRows(k).setZero();
      for (Eigen::Index i = 0; i < k; ++i) a(n - p + i, i) = slacks[static_cast<std::size_t>(i)];
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - p + k);
      rhs.head(n - p) = basis.transpose() * b;
      mu = nnls(a, rhs);
    }
    const Eigen::VectorXd residual = basis * (basis.transpose() * (b - c * mu));
    stationarity = residual.cwiseAbs().maxCoeff();
  }

  double complementarity = 0.0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    complementarity = std::max(complementarity, mu(k) * slacks[static_cast<std::size_t>(k)]);
  }
  return std::max({primal, stationarity, complementarity, 0.0});
}

}  // namespace singidx
