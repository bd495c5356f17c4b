#include "singidx/tracker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "singidx/error.hpp"

namespace singidx {

namespace {

constexpr double kPi = 3.14159265358979323846;

int position_rows(TaskSpace task) { return task == TaskSpace::Position2d ? 2 : 3; }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

struct TaskErrors {
  Eigen::VectorXd error;  // full task-space error, goal - current
  double position = 0.0;
  double orientation = 0.0;
};

TaskErrors task_errors(const ChainModel& chain, const Pose& goal, const Pose& current) {
  TaskErrors e;
  e.error = task_error(chain, goal, current);
  const int pos = position_rows(chain.task());
  e.position = e.error.head(pos).norm();
  if (chain.task() == TaskSpace::Pose6d) e.orientation = e.error.tail(3).norm();
  return e;
}

// Clips the translational and angular parts of a task velocity separately.
Eigen::VectorXd clip_reference(const ChainModel& chain, Eigen::VectorXd xdot, const TrackerConfig& cfg) {
  const int pos = position_rows(chain.task());
  const double v = xdot.head(pos).norm();
  if (v > cfg.max_ref_speed) xdot.head(pos) *= cfg.max_ref_speed / v;
  if (chain.task() == TaskSpace::Pose6d) {
    const double w = xdot.tail(3).norm();
    if (w > cfg.max_ref_angular_speed) xdot.tail(3) *= cfg.max_ref_angular_speed / w;
  }
  return xdot;
}

JointVector clamp_to_limits(const ChainModel& chain, JointVector q) {
  return q.cwiseMax(chain.lower_limits()).cwiseMin(chain.upper_limits());
}

JointVector perturb(const ChainModel& chain, const JointVector& q, double magnitude, std::mt19937_64& rng) {
  JointVector out = q;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += (rng() >> 63) ? magnitude : -magnitude;
  return clamp_to_limits(chain, out);
}

TrialRecord state_record(const ChainModel& chain, const JointVector& q) {
  TrialRecord r;
  r.q = q;
  r.qdot = JointVector::Zero(q.size());
  r.indices = index_report(geometric_jacobian(chain, q), SphereTrace{});
  return r;
}

// control_step with xdot_ref halved until the QP becomes feasible.
struct ScaledStep {
  ControlResult result;
  double scale = 1.0;
};

ScaledStep scaled_control_step(const ChainModel& chain, const JointVector& q, const Eigen::VectorXd& xdot_ref,
                               const Method& method, const TrackerConfig& cfg) {
  double scale = 1.0;
  for (int attempt = 0; attempt <= cfg.max_reference_halvings; ++attempt) {
    try {
      ScaledStep s{control_step(chain, q, scale * xdot_ref, method, cfg), scale};
      s.result.record.reference_scale = scale;
      s.result.record.flags.reference_scaled = attempt > 0;
      return s;
    } catch (const Infeasible&) {
      scale *= 0.5;
    }
  }
  throw Infeasible("no feasible reference scaling");
}

void validate_start(const ChainModel& chain, const JointVector& q0, const char* what) {
  if (q0.size() != chain.dof()) {
    std::ostringstream os;
    os << what << ": expected " << chain.dof() << " joint values, got " << q0.size();
    throw DimensionMismatch(os.str());
  }
  if (!chain.within_limits(q0, 1e-12)) throw InvalidArgument(std::string(what) + ": q0 outside joint limits");
}

}  // namespace

const char* to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::IK: return "ik";
    case MethodKind::SIK: return "sik";
    case MethodKind::SIK2: return "sik2";
    case MethodKind::MIK: return "mik";
    case MethodKind::EIK: return "eik";
  }
  return "?";
}

std::optional<MethodKind> parse_method_kind(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (MethodKind k : {MethodKind::IK, MethodKind::SIK, MethodKind::SIK2, MethodKind::MIK, MethodKind::EIK}) {
    if (lower == to_string(k)) return k;
  }
  return std::nullopt;
}

void Method::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("Method: alpha must be finite and >= 0");
  if (kind == MethodKind::IK && alpha != 0.0) throw InvalidArgument("Method: IK requires alpha == 0");
  const bool scaled = std::holds_alternative<ScaledCurrent>(strategy.variant());
  if (kind == MethodKind::SIK2 && !scaled) throw InvalidArgument("Method: sik2 requires a ScaledCurrent reference");
  if ((kind == MethodKind::SIK || kind == MethodKind::EIK) && scaled) {
    throw InvalidArgument("Method: sik/eik require a fixed or spherical reference");
  }
}

Method default_method(MethodKind kind, TaskSpace task) {
  const bool planar = task == TaskSpace::Position2d;
  Method m;
  m.kind = kind;
  switch (kind) {
    case MethodKind::IK: m.alpha = 0.0; break;
    case MethodKind::SIK:
    case MethodKind::MIK: m.alpha = planar ? 1.0 : 10.0; break;
    case MethodKind::SIK2:
      m.alpha = planar ? 1.0 : 10.0;
      m.strategy = ScaledCurrent{2.0};
      break;
    case MethodKind::EIK: m.alpha = planar ? 0.1 : 10.0; break;
  }
  return m;
}

void TrackerConfig::validate() const {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(dt) || !positive(vel_limit) || !positive(pos_gain) || !positive(max_ref_speed) ||
      !positive(max_ref_angular_speed) || !positive(goal_tol) || !positive(singular_escape) ||
      !positive(singular_threshold)) {
    throw InvalidArgument("TrackerConfig: parameters must be positive and finite");
  }
  if (max_steps < 1 || escape_retries < 0 || max_reference_halvings < 0) {
    throw InvalidArgument("TrackerConfig: invalid step or retry budget");
  }
}

void velocity_bounds(const ChainModel& chain, const JointVector& q, const TrackerConfig& cfg,
                     Eigen::VectorXd& lower, Eigen::VectorXd& upper) {
  const Eigen::VectorXd lo = chain.lower_limits();
  const Eigen::VectorXd hi = chain.upper_limits();
  const Eigen::Index n = q.size();
  lower.resize(n);
  upper.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lower(i) = std::max(-cfg.vel_limit, std::min(0.0, (lo(i) - q(i)) / cfg.dt));
    upper(i) = std::min(cfg.vel_limit, std::max(0.0, (hi(i) - q(i)) / cfg.dt));
  }
}

Eigen::VectorXd method_gradient(const JacobianBundle& bundle, const Method& method) {
  const auto n = static_cast<Eigen::Index>(bundle.partials.size());
  if (method.kind == MethodKind::IK) return Eigen::VectorXd::Zero(n);
  try {
    switch (method.kind) {
      case MethodKind::SIK: {
        const SpdMatrix m(bundle.jacobian * bundle.jacobian.transpose());
        return geometry_index_gradient(bundle, resolve_reference(method.strategy, m));
      }
      case MethodKind::SIK2:
        return scaled_current_gradient(bundle, std::get<ScaledCurrent>(method.strategy.variant()).k);
      case MethodKind::MIK:
        return -manipulability_gradient(bundle);
      case MethodKind::EIK: {
        const SpdMatrix m(bundle.jacobian * bundle.jacobian.transpose());
        const SpdMatrix sigma = resolve_reference(method.strategy, m);
        return euclidean_index_gradient(bundle, SymMatrix(sigma.matrix()));
      }
      case MethodKind::IK: break;
    }
  } catch (const DegenerateMatrix& e) {
    throw SingularStart(std::string("index undefined: ") + e.what());
  } catch (const RankDeficient& e) {
    throw SingularStart(std::string("index undefined: ") + e.what());
  }
  return Eigen::VectorXd::Zero(n);
}

ControlResult control_step(const ChainModel& chain, const JointVector& q, const Eigen::VectorXd& xdot_ref,
                           const Method& method, const TrackerConfig& cfg) {
  if (q.size() != chain.dof()) throw DimensionMismatch("control_step: q has the wrong length");
  if (xdot_ref.size() != chain.task_dim()) throw DimensionMismatch("control_step: xdot_ref has the wrong length");

  const JacobianBundle bundle = jacobian_partials(chain, q);
  ControlResult out;
  out.record.q = q;
  out.record.indices = index_report(bundle.jacobian, SphereTrace{});
  if (chain.dof() < chain.task_dim() || out.record.indices.sigma_min < cfg.singular_threshold) {
    throw SingularStart("control_step: sigma_min below threshold");
  }

  QpProblem qp;
  const int n = chain.dof();
  qp.weight = Eigen::MatrixXd::Identity(n, n);
  qp.linear = method.alpha * method_gradient(bundle, method);
  qp.eq_matrix = bundle.jacobian;
  qp.eq_rhs = xdot_ref;
  velocity_bounds(chain, q, cfg, qp.lower, qp.upper);

  try {
    out.qp = solve_qp(qp);
  } catch (const IllConditioned& e) {
    throw SingularStart(std::string("control_step: ") + e.what());
  }
  if (out.qp.status != QpStatus::Optimal) throw Infeasible(std::string("control_step: QP ") + to_string(out.qp.status));

  out.qdot = out.qp.qdot;
  out.record.qdot = out.qdot;
  out.record.qdot_norm = out.qdot.norm();
  out.record.kkt_residual = out.qp.kkt_residual;
  return out;
}

const char* to_string(ReachOutcome outcome) {
  switch (outcome) {
    case ReachOutcome::Success: return "success";
    case ReachOutcome::Timeout: return "timeout";
    case ReachOutcome::Stalled: return "stalled";
  }
  return "?";
}

ReachResult reach_task(const ChainModel& chain, const JointVector& q0, const Pose& goal, const Method& method,
                       const TrackerConfig& cfg) {
  validate_start(chain, q0, "reach_task");
  method.validate();
  cfg.validate();

  std::mt19937_64 rng(cfg.rng_seed);
  ReachResult result;
  JointVector q = q0;
  int stuck = 0;

  for (int step = 0;; ++step) {
    const TaskErrors err = task_errors(chain, goal, forward_kinematics(chain, q));
    const bool done = err.position < cfg.goal_tol &&
                      (chain.task() != TaskSpace::Pose6d || err.orientation < cfg.goal_tol);
    if (done || step == cfg.max_steps) {
      TrialRecord last = state_record(chain, q);
      last.step = step;
      last.t = step * cfg.dt;
      last.position_error = err.position;
      last.orientation_error = err.orientation;
      result.trace.push_back(std::move(last));
      result.outcome = done ? ReachOutcome::Success : ReachOutcome::Timeout;
      return result;
    }

    const Eigen::VectorXd xdot = clip_reference(chain, cfg.pos_gain * err.error, cfg);
    TrialRecord record;
    try {
      const ScaledStep s = scaled_control_step(chain, q, xdot, method, cfg);
      record = s.result.record;
      q = clamp_to_limits(chain, q + cfg.dt * s.result.qdot);
      stuck = 0;
    } catch (const Error& e) {
      if (!dynamic_cast<const SingularStart*>(&e) && !dynamic_cast<const Infeasible*>(&e)) throw;
      record = state_record(chain, q);
      const bool singular = dynamic_cast<const SingularStart*>(&e) != nullptr;
      record.flags.singular_escape = singular;
      record.flags.failed = !singular;
      if (++stuck > cfg.escape_retries) {
        record.step = step;
        record.t = step * cfg.dt;
        record.position_error = err.position;
        record.orientation_error = err.orientation;
        result.trace.push_back(std::move(record));
        result.outcome = ReachOutcome::Stalled;
        return result;
      }
      q = perturb(chain, q, cfg.singular_escape, rng);
    }
    record.step = step;
    record.t = step * cfg.dt;
    record.position_error = err.position;
    record.orientation_error = err.orientation;
    result.trace.push_back(std::move(record));
  }
}

PathFunction circle_path(const Eigen::Vector3d& center, double radius, CirclePlane plane,
                         const Eigen::Quaterniond& orientation) {
  if (!(radius >= 0.0)) throw InvalidArgument("circle_path: radius must be >= 0");
  Eigen::Vector3d u, v;
  switch (plane) {
    case CirclePlane::XY: u = Eigen::Vector3d::UnitX(); v = Eigen::Vector3d::UnitY(); break;
    case CirclePlane::XZ: u = Eigen::Vector3d::UnitX(); v = Eigen::Vector3d::UnitZ(); break;
    case CirclePlane::YZ: u = Eigen::Vector3d::UnitY(); v = Eigen::Vector3d::UnitZ(); break;
  }
  const Eigen::Quaterniond rot = orientation.normalized();
  return [center, radius, u, v, rot](double t) {
    const double phi = 2.0 * kPi * t;
    Pose p;
    p.position = center + radius * (std::cos(phi) * u + std::sin(phi) * v);
    p.orientation = rot;
    return p;
  };
}

std::vector<TrialRecord> track_path(const ChainModel& chain, const JointVector& q0, const PathFunction& path,
                                    const Method& method, const TrackerConfig& cfg, int steps) {
  validate_start(chain, q0, "track_path");
  method.validate();
  cfg.validate();
  if (steps < 0) throw InvalidArgument("track_path: steps must be >= 0");

  std::vector<TrialRecord> records;
  if (steps == 0) return records;
  records.reserve(static_cast<std::size_t>(steps));

  JointVector q = q0;
  const Pose start = path(0.0);
  const TaskErrors initial = task_errors(chain, start, forward_kinematics(chain, q));
  if (initial.position >= cfg.goal_tol ||
      (chain.task() == TaskSpace::Pose6d && initial.orientation >= cfg.goal_tol)) {
    q = reach_task(chain, q, start, method, cfg).trace.back().q;
  }

  std::mt19937_64 rng(cfg.rng_seed);
  for (int k = 0; k < steps; ++k) {
    const double t_next = static_cast<double>(k + 1) / steps;
    const Pose target = path(t_next);
    const Eigen::VectorXd xdot = task_error(chain, target, forward_kinematics(chain, q)) / cfg.dt;

    TrialRecord record;
    JointVector qdot = JointVector::Zero(q.size());
    StepFlags flags;
    double scale = 1.0;
    double kkt = 0.0;
    try {
      const ScaledStep s = scaled_control_step(chain, q, xdot, method, cfg);
      qdot = s.result.qdot;
      flags = s.result.record.flags;
      scale = s.scale;
      kkt = s.result.record.kkt_residual;
      q = clamp_to_limits(chain, q + cfg.dt * qdot);
    } catch (const SingularStart&) {
      flags.singular_escape = true;
      q = perturb(chain, q, cfg.singular_escape, rng);
    } catch (const Infeasible&) {
      flags.failed = true;
    }

    record = state_record(chain, q);
    const TaskErrors err = task_errors(chain, target, forward_kinematics(chain, q));
    record.step = k;
    record.t = t_next;
    record.qdot = qdot;
    record.qdot_norm = qdot.norm();
    record.flags = flags;
    record.reference_scale = scale;
    record.kkt_residual = kkt;
    record.position_error = err.position;
    record.orientation_error = err.orientation;
    records.push_back(std::move(record));
  }
  return records;
}

ReachingProblem sample_reaching_problem(const ChainModel& chain, std::uint64_t seed, int trial) {
  if (chain.dof() < chain.task_dim()) throw InvalidArgument("sample_reaching_problem: chain has too few joints");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial)};
  std::mt19937_64 rng(seq);

  const Eigen::VectorXd lo = chain.lower_limits();
  const Eigen::VectorXd hi = chain.upper_limits();
  ReachingProblem p;
  p.q0.resize(chain.dof());
  for (;;) {
    for (int i = 0; i < chain.dof(); ++i) p.q0(i) = uniform(rng, lo(i), hi(i));
    if (singular_spectrum(geometric_jacobian(chain, p.q0)).minCoeff() > 1e-6) break;
  }

  const double r_in = 0.2 * chain.reach();
  const double r_out = 0.9 * chain.reach();
  if (chain.task() == TaskSpace::Position2d) {
    // Uniform by area.
    const double r = std::sqrt(uniform(rng, r_in * r_in, r_out * r_out));
    const double phi = uniform(rng, -kPi, kPi);
    p.goal.position = Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), 0.0);
  } else {
    // Uniform by volume.
    const double r = std::cbrt(uniform(rng, r_in * r_in * r_in, r_out * r_out * r_out));
    const double z = uniform(rng, -1.0, 1.0);
    const double phi = uniform(rng, -kPi, kPi);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    p.goal.position = r * Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), z);
  }
  p.goal.orientation = forward_kinematics(chain, p.q0).orientation;
  return p;
}

}  // namespace singidx
