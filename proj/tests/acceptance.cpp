// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "singidx/chain_io.hpp"
#include "singidx/experiment.hpp"
#include "singidx/indices.hpp"
#include "singidx/logm.hpp"
#include "singidx/qp.hpp"
#include "singidx/spd.hpp"
#include "support.hpp"

using namespace singidx;
using testsupport::chain_path;
using testsupport::kPi;
using testsupport::Rng;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

JointVector regular_q(const ChainModel& chain, Rng& rng, double floor) {
  for (;;) {
    JointVector q(chain.dof());
    const Eigen::VectorXd lo = chain.lower_limits(), hi = chain.upper_limits();
    for (int i = 0; i < chain.dof(); ++i) q(i) = rng.uniform(std::max(lo(i), -kPi), std::min(hi(i), kPi));
    if (singular_spectrum(geometric_jacobian(chain, q)).minCoeff() > floor) return q;
  }
}

SpdMatrix manip(const ChainModel& chain, const JointVector& q) {
  const Eigen::MatrixXd j = geometric_jacobian(chain, q);
  return SpdMatrix(j * j.transpose());
}

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// 1. Analytic gradients against central differences, reference held fixed.
Outcome gradients() {
  const auto start = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (const char* name : {"planar3.chain", "planar6.chain", "planar9.chain"}) {
    const ChainModel chain = load_chain(chain_path(name));
    for (int trial = 0; trial < 200; ++trial) {
      const JointVector q = regular_q(chain, rng, 1e-2);
      const JacobianBundle b = jacobian_partials(chain, q);
      const SpdMatrix sigma = resolve_reference(SphereTrace{}, SpdMatrix(b.jacobian * b.jacobian.transpose()));
      const auto fd = [&](const std::function<double(const Eigen::VectorXd&)>& f) {
        return testsupport::central_gradient(f, q, 1e-6);
      };
      worst = std::max(worst, testsupport::relative_error(
                                  geometry_index_gradient(b, sigma),
                                  fd([&](const Eigen::VectorXd& x) { return geometry_index(manip(chain, x), sigma); })));
      worst = std::max(worst, testsupport::relative_error(manipulability_gradient(b), fd([&](const Eigen::VectorXd& x) {
                                                            return manipulability_index(geometric_jacobian(chain, x));
                                                          })));
      const SymMatrix sym(sigma.matrix());
      worst = std::max(worst, testsupport::relative_error(euclidean_index_gradient(b, sym),
                                                          fd([&](const Eigen::VectorXd& x) {
                                                            return euclidean_index(SymMatrix(manip(chain, x).matrix()), sym);
                                                          })));
    }
  }
  const double t = seconds_since(start);
  return {worst < 1e-5 && t < 30.0, "worst relative error " + fmt("%.2e", worst) + ", " + fmt("%.1f", t) + " s"};
}

// 2. Block-triangular logarithm identity against the eigenbasis derivative.
Outcome block_log() {
  const auto start = Clock::now();
  Rng rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = trial % 3 == 0 ? 2 : (trial % 3 == 1 ? 3 : 6);
    const SpdMatrix p(rng.spd(n));
    const SymMatrix e(rng.symmetric(n));
    const Eigen::MatrixXd diff = block_log_derivative(p, e).matrix() - frechet_log(p, e).matrix();
    worst = std::max(worst, diff.cwiseAbs().maxCoeff());
  }
  const double t = seconds_since(start);
  return {worst < 1e-8 && t < 10.0, "worst entry difference " + fmt("%.2e", worst) + ", " + fmt("%.1f", t) + " s"};
}

// 3. Closed-form gradient for the scaled-current reference.
Outcome scaled_current() {
  Rng rng(1003);
  double worst_grad = 0.0, worst_value = 0.0;
  const char* names[] = {"planar3.chain", "planar6.chain", "planar9.chain", "ur10.chain"};
  for (int trial = 0; trial < 200; ++trial) {
    const ChainModel chain = load_chain(chain_path(names[trial % 4]));
    const JacobianBundle b = jacobian_partials(chain, regular_q(chain, rng, 1e-2));
    const double k = rng.uniform(1.1, 5.0);
    const SpdMatrix m0(b.jacobian * b.jacobian.transpose());
    const SpdMatrix sigma(k * m0.matrix());
    const Eigen::VectorXd ref = geometry_index_gradient(b, sigma);
    worst_grad = std::max(worst_grad,
                          (scaled_current_gradient(b, k) - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.norm()));
    const double expected = chain.task_dim() * std::log(k) * std::log(k);
    worst_value = std::max(worst_value, std::abs(geometry_index(m0, sigma) - expected));
  }
  return {worst_grad < 1e-6 && worst_value < 1e-10,
          "gradient " + fmt("%.2e", worst_grad) + ", index value " + fmt("%.2e", worst_value)};
}

// 4. Congruence invariance of the distance; rotation invariance of xi.
Outcome affine_invariance() {
  Rng rng(1004);
  double worst_d = 0.0, worst_xi = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 5;
    const SpdMatrix s(rng.spd(n)), l(rng.spd(n));
    Eigen::MatrixXd a = rng.gaussian(n, n);
    while (std::abs(a.determinant()) < 0.1) a = rng.gaussian(n, n);
    const double d0 = affine_distance(s, l);
    const double d1 = affine_distance(SpdMatrix(congruence(a, s.matrix())), SpdMatrix(congruence(a, l.matrix())));
    worst_d = std::max(worst_d, std::abs(d1 - d0));

    const Eigen::MatrixXd r = rng.orthogonal(n);
    const SpdMatrix sphere(rng.uniform(0.5, 3.0) * Eigen::MatrixXd::Identity(n, n));
    const double xi0 = geometry_index(s, sphere);
    const double xi1 = geometry_index(SpdMatrix(congruence(r, s.matrix())), sphere);
    worst_xi = std::max(worst_xi, std::abs(xi1 - xi0));
  }
  return {worst_d < 1e-9 && worst_xi < 1e-9, "distance " + fmt("%.2e", worst_d) + ", xi " + fmt("%.2e", worst_xi)};
}

// 5. Squeeze and inflation studies.
Outcome failure_modes() {
  const double a = 1.0;
  const SpdMatrix sphere(a * Eigen::MatrixXd::Identity(2, 2));
  bool ok = true;
  double prev_xi = -1.0, worst_m = 0.0;
  for (int i = 11; i <= 100; ++i) {
    const double c = i / 10.0;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = c * a;
    m(1, 1) = a / c;
    const Eigen::MatrixXd j = m.cwiseSqrt();
    worst_m = std::max(worst_m, std::abs(manipulability_index(j) - a));
    const double xi = geometry_index(SpdMatrix(m), sphere);
    ok = ok && xi > prev_xi;
    prev_xi = xi;
  }
  const double target = 4.0;
  const SpdMatrix big(target * Eigen::MatrixXd::Identity(2, 2));
  double prev = std::numeric_limits<double>::infinity(), worst_kappa = 0.0, last = 0.0;
  for (int i = 1; i <= 40; ++i) {
    const double s = target * i / 40.0;
    const Eigen::MatrixXd j = std::sqrt(s) * Eigen::MatrixXd::Identity(2, 2);
    worst_kappa = std::max(worst_kappa, std::abs(dexterity_index(j) - 1.0));
    const double xi = geometry_index(SpdMatrix(j * j.transpose()), big);
    ok = ok && xi < prev;
    prev = xi;
    last = xi;
  }
  ok = ok && worst_m < 1e-12 && worst_kappa < 1e-12 && last < 1e-20;
  return {ok, "manipulability drift " + fmt("%.1e", worst_m) + ", dexterity drift " + fmt("%.1e", worst_kappa) +
                  ", final xi " + fmt("%.1e", last)};
}

struct ExperimentRuns {
  std::vector<std::string> reach_csv;  // per planar chain
  std::vector<ReachBatch> reach;
  std::string track_csv;
  TrackBatch track;
  std::vector<Method> track_methods;
  double seconds = 0.0;
};

ExperimentRuns run_experiments() {
  const auto start = Clock::now();
  ExperimentRuns out;
  for (const char* name : {"planar3.chain", "planar6.chain", "planar9.chain"}) {
    ExperimentSpec spec;
    spec.chain_path = chain_path(name);
    for (MethodKind k : {MethodKind::SIK, MethodKind::SIK2, MethodKind::MIK, MethodKind::IK, MethodKind::EIK}) {
      spec.methods.push_back(default_method(k, TaskSpace::Position2d));
    }
    spec.trials = 200;
    spec.seed = 42;
    spec.threads = threads();
    out.reach.push_back(run_reach_batch(spec));
    std::ostringstream csv;
    write_reach_csv(csv, out.reach.back(), spec.methods);
    out.reach_csv.push_back(csv.str());
  }
  ExperimentSpec track;
  track.chain_path = chain_path("ur10.chain");
  track.task = ExperimentTask::Track;
  track.methods = {default_method(MethodKind::IK, TaskSpace::Position3d),
                   default_method(MethodKind::SIK, TaskSpace::Position3d)};
  track.seed = 42;
  track.threads = threads();
  out.track = run_track(track);
  out.track_methods = track.methods;
  std::ostringstream csv;
  write_track_csv(csv, out.track, track.methods);
  out.track_csv = csv.str();
  out.seconds = seconds_since(start);
  return out;
}

// 6. KKT residuals of every experiment step, plus closed forms.
Outcome qp_correctness(const ExperimentRuns& runs) {
  double worst_kkt = 0.0;
  for (const ReachBatch& b : runs.reach) {
    for (const ReachTrial& t : b.trials) worst_kkt = std::max(worst_kkt, t.max_kkt_residual);
  }
  for (const TrackRun& r : runs.track.runs) {
    for (const TrialRecord& rec : r.records) worst_kkt = std::max(worst_kkt, rec.kkt_residual);
  }

  Rng rng(1006);
  double worst_square = 0.0, worst_redundant = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 6;
    QpProblem qp;
    Eigen::MatrixXd j = rng.gaussian(n, n);
    while (std::abs(j.determinant()) < 0.1) j = rng.gaussian(n, n);
    qp.weight = rng.spd(n, 1.0);
    qp.linear = Eigen::VectorXd::Zero(n);
    qp.eq_matrix = j;
    qp.eq_rhs = rng.gaussian(n, 1).col(0);
    qp.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    qp.upper = -qp.lower;
    const Eigen::VectorXd ref = j.fullPivLu().solve(qp.eq_rhs);
    worst_square = std::max(worst_square, (solve_qp(qp).qdot - ref).norm() / std::max(1.0, ref.norm()));

    const int p = 1 + trial % 3;
    const int m = p + 1 + trial % 5;
    const Eigen::MatrixXd jr = rng.gaussian(p, m);
    const Eigen::MatrixXd w = rng.spd(m, 1.0);
    QpProblem red;
    red.weight = w;
    red.linear = Eigen::VectorXd::Zero(m);
    red.eq_matrix = jr;
    red.eq_rhs = rng.gaussian(p, 1).col(0);
    red.lower = Eigen::VectorXd::Constant(m, -std::numeric_limits<double>::infinity());
    red.upper = -red.lower;
    const Eigen::MatrixXd winv_jt = w.ldlt().solve(jr.transpose());
    const Eigen::VectorXd ref_r = winv_jt * (jr * winv_jt).ldlt().solve(red.eq_rhs);
    worst_redundant = std::max(worst_redundant, (solve_qp(red).qdot - ref_r).norm() / std::max(1.0, ref_r.norm()));
  }
  return {worst_kkt < 1e-8 && worst_square < 1e-9 && worst_redundant < 1e-9,
          "max KKT residual " + fmt("%.2e", worst_kkt) + ", square " + fmt("%.1e", worst_square) + ", redundant " +
              fmt("%.1e", worst_redundant)};
}

// 7. Median final sigma_min ordering in the reaching experiment.
Outcome reaching(const ExperimentRuns& runs) {
  bool ok = true;
  std::string detail;
  const char* names[] = {"planar3", "planar6", "planar9"};
  for (std::size_t c = 0; c < runs.reach.size(); ++c) {
    const SummaryStats& s = runs.reach[c].summary;
    double sik = 0.0, ik = 0.0, best_other = -1.0;
    for (const MethodSummary& m : s.methods) {
      if (m.method == "sik") sik = m.sigma_min.median;
      if (m.method == "ik") ik = m.sigma_min.median;
    }
    for (const MethodSummary& m : s.methods) {
      if (m.method != "sik" && m.sigma_min.count > 0) best_other = std::max(best_other, m.sigma_min.median);
    }
    ok = ok && sik > ik && sik >= best_other;
    detail += std::string(c ? "; " : "") + names[c] + " sik " + fmt("%.4f", sik) + " vs ik " + fmt("%.4f", ik) +
              ", best other " + fmt("%.4f", best_other);
  }
  ok = ok && runs.seconds < 300.0;
  return {ok, detail + "; experiments took " + fmt("%.0f", runs.seconds) + " s"};
}

// 8. Minimum sigma_min along the circle, and the velocity box.
Outcome tracking(const ExperimentRuns& runs) {
  double min_sigma[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double max_qdot = 0.0;
  int failed = 0;
  for (const TrackRun& r : runs.track.runs) {
    for (const TrialRecord& rec : r.records) {
      min_sigma[r.method] = std::min(min_sigma[r.method], rec.indices.sigma_min);
      max_qdot = std::max(max_qdot, rec.qdot.cwiseAbs().maxCoeff());
      failed += rec.flags.failed ? 1 : 0;
    }
  }
  const double limit = TrackerConfig{}.vel_limit;
  const bool ok = min_sigma[1] > min_sigma[0] && max_qdot <= limit + 1e-9;
  return {ok, "ur10 sik " + fmt("%.4f", min_sigma[1]) + " vs ik " + fmt("%.4f", min_sigma[0]) + " (ratio " +
                  fmt("%.2f", min_sigma[1] / min_sigma[0]) + "), max |qdot| " + fmt("%.4f", max_qdot) + " <= " +
                  fmt("%.4f", limit) + ", failed steps " + std::to_string(failed)};
}

// 9. Bitwise reproducibility of the experiment CSVs.
Outcome determinism(const ExperimentRuns& first) {
  const ExperimentRuns second = run_experiments();
  const bool ok = first.reach_csv == second.reach_csv && first.track_csv == second.track_csv;
  std::size_t bytes = first.track_csv.size();
  for (const std::string& s : first.reach_csv) bytes += s.size();
  return {ok, std::to_string(bytes) + " CSV bytes compared"};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %d %s: %s (%s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  const auto guarded = [&](int id, const char* name, const std::function<Outcome()>& f) {
    try {
      report(id, name, f());
    } catch (const std::exception& e) {
      report(id, name, Outcome{false, std::string("exception: ") + e.what()});
    }
  };

  guarded(1, "gradient correctness", gradients);
  guarded(2, "block-log identity", block_log);
  guarded(3, "closed-form scaled-current gradient", scaled_current);
  guarded(4, "affine invariance", affine_invariance);
  guarded(5, "index failure modes", failure_modes);

  ExperimentRuns runs;
  try {
    runs = run_experiments();
  } catch (const std::exception& e) {
    for (int id = 6; id <= 9; ++id) report(id, "experiments", Outcome{false, std::string("exception: ") + e.what()});
    return 1;
  }
  guarded(6, "QP correctness", [&] { return qp_correctness(runs); });
  guarded(7, "reaching experiment", [&] { return reaching(runs); });
  guarded(8, "path tracking", [&] { return tracking(runs); });
  guarded(9, "determinism", [&] { return determinism(runs); });

  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
