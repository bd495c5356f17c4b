#pragma once

// Velocity-level operational-space tracking. Every control step solves
//
//   minimize    1/2 qdot^T qdot + alpha g(q)^T qdot
//   subject to  J(q) qdot = xdot_ref,  qdot_min <= qdot <= qdot_max,
//
// where g is the gradient of the secondary objective selected by the method.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "singidx/indices.hpp"
#include "singidx/kinematics.hpp"
#include "singidx/qp.hpp"

namespace singidx {

enum class MethodKind {
  IK,    // no secondary objective
  SIK,   // geometry-aware index, spherical reference
  SIK2,  // geometry-aware index, reference k * M0 (closed-form gradient)
  MIK,   // manipulability maximization
  EIK,   // Euclidean distance to a spherical reference
};

const char* to_string(MethodKind kind);
/// Accepts "ik", "sik", "sik2", "mik", "eik" (case-insensitive).
std::optional<MethodKind> parse_method_kind(const std::string& s);

struct Method {
  MethodKind kind = MethodKind::IK;
  double alpha = 0.0;
  ReferenceStrategy strategy = SphereTrace{};

  /// Throws InvalidArgument when alpha < 0, when IK has alpha != 0, or when
  /// the strategy does not fit the method (SIK2 needs ScaledCurrent).
  void validate() const;
};

/// Gains used in the reaching and path experiments: alpha = 1 on planar
/// chains (0.1 for EIK), alpha = 10 on spatial chains, k = 2 for SIK2.
Method default_method(MethodKind kind, TaskSpace task);

struct TrackerConfig {
  double dt = 0.05;                         // s
  double vel_limit = 3.14159265358979323846 / 8.0;  // rad/s, symmetric per joint
  double pos_gain = 2.0;                    // 1/s
  double max_ref_speed = 0.5;               // m/s, clip on the reaching reference
  double max_ref_angular_speed = 0.5;       // rad/s
  double goal_tol = 1e-3;                   // m (rad for orientation)
  int max_steps = 2000;
  double singular_escape = 1e-3;            // rad, per-joint perturbation magnitude
  int escape_retries = 5;
  double singular_threshold = 1e-10;        // sigma_min below which a start is singular
  int max_reference_halvings = 30;
  std::uint64_t rng_seed = 42;

  void validate() const;
};

struct StepFlags {
  bool singular_escape = false;   // configuration was perturbed instead of stepping
  bool reference_scaled = false;  // xdot_ref was shrunk to make the QP feasible
  bool failed = false;            // no feasible step; qdot = 0
};

struct TrialRecord {
  int step = 0;
  double t = 0.0;                 // path parameter (track) or time (reach)
  JointVector q;
  JointVector qdot;               // joint velocity commanded at this step
  IndexReport indices;
  double position_error = 0.0;    // m
  double orientation_error = 0.0; // rad, pose tasks only
  double qdot_norm = 0.0;         // rad/s, Euclidean
  double reference_scale = 1.0;
  double kkt_residual = 0.0;
  StepFlags flags;
};

struct ControlResult {
  JointVector qdot;
  TrialRecord record;
  QpSolution qp;
};

/// Joint velocity bounds: the symmetric velocity box intersected with the
/// bounds that keep q + qdot dt inside the joint limits.
void velocity_bounds(const ChainModel& chain, const JointVector& q, const TrackerConfig& cfg,
                     Eigen::VectorXd& lower, Eigen::VectorXd& upper);

/// Gradient g(q) of the minimized secondary objective: xi (SIK, SIK2), xi_E
/// (EIK), -m (MIK), zero for IK. Throws SingularStart when the index is
/// undefined at q.
Eigen::VectorXd method_gradient(const JacobianBundle& bundle, const Method& method);

/// One QP step. Throws SingularStart if sigma_min(J) < cfg.singular_threshold
/// or the method's index is undefined at q, and Infeasible when no bounded
/// qdot achieves xdot_ref.
ControlResult control_step(const ChainModel& chain, const JointVector& q, const Eigen::VectorXd& xdot_ref,
                           const Method& method, const TrackerConfig& cfg);

enum class ReachOutcome { Success, Timeout, Stalled };
const char* to_string(ReachOutcome outcome);

struct ReachResult {
  ReachOutcome outcome = ReachOutcome::Timeout;
  /// One record per visited configuration; the last one is the final state
  /// (with zero qdot), so trace.size() - 1 control steps were executed.
  std::vector<TrialRecord> trace;
  int steps() const { return static_cast<int>(trace.size()) - 1; }
};

/// Drives the tool position to `goal` with xdot_ref = pos_gain (goal - x),
/// clipped to the configured reference speed. A singular configuration is
/// perturbed by up to cfg.singular_escape per joint, at most
/// cfg.escape_retries times in a row before the task is declared stalled.
ReachResult reach_task(const ChainModel& chain, const JointVector& q0, const Pose& goal, const Method& method,
                       const TrackerConfig& cfg);

using PathFunction = std::function<Pose(double)>;

enum class CirclePlane { XY, XZ, YZ };

/// Circle of `radius` about `center` in a coordinate plane, starting at
/// center + radius * (first plane axis), with constant orientation.
PathFunction circle_path(const Eigen::Vector3d& center, double radius, CirclePlane plane,
                         const Eigen::Quaterniond& orientation = Eigen::Quaterniond::Identity());

/// Tracks path(t), t in [0, 1], in `steps` control steps. If path(0) is not
/// already within goal_tol of the tool, an unrecorded reaching phase moves
/// there first. Record k holds the state after step k + 1 (t = (k + 1) / steps)
/// and the qdot that produced it; failed steps are flagged and use qdot = 0.
std::vector<TrialRecord> track_path(const ChainModel& chain, const JointVector& q0, const PathFunction& path,
                                    const Method& method, const TrackerConfig& cfg, int steps);

struct ReachingProblem {
  JointVector q0;
  Pose goal;
};

/// Deterministic random reaching problem for (seed, trial): q0 uniform in the
/// joint limits with sigma_min(J) > 1e-6, goal uniform in the annulus (planar)
/// or spherical shell (spatial) with radii [0.2, 0.9] x reach about the base.
/// Pose tasks keep the start orientation as the goal orientation.
ReachingProblem sample_reaching_problem(const ChainModel& chain, std::uint64_t seed, int trial);

}  // namespace singidx
