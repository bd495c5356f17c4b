#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "singidx/spd.hpp"

namespace singidx {

enum class JointKind { Revolute, Prismatic };

/// Operational space tracked by a chain: planar position (p = 2), spatial
/// position (p = 3) or full pose (p = 6).
enum class TaskSpace { Position2d, Position3d, Pose6d };

int task_dimension(TaskSpace task);
const char* to_string(TaskSpace task);

struct JointLimits {
  double lower;
  double upper;
};

/// One actuated joint. The joint moves about (revolute) or along (prismatic)
/// `axis`, expressed in the joint frame; `link` is the fixed transform from
/// the moved joint frame to the next joint frame.
struct JointSpec {
  JointKind kind = JointKind::Revolute;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Eigen::Isometry3d link = Eigen::Isometry3d::Identity();
  JointLimits limits{-2.0 * 3.14159265358979323846, 2.0 * 3.14159265358979323846};
};

/// Joint positions (rad or m) or velocities (rad/s or m/s).
using JointVector = Eigen::VectorXd;

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

/// Serial kinematic chain. Immutable once constructed.
class ChainModel {
 public:
  /// Throws ValidationError if the chain is empty, an axis is not a unit
  /// vector or a joint has lower > upper.
  ChainModel(std::string name, std::vector<JointSpec> joints, Eigen::Isometry3d tool, TaskSpace task);

  const std::string& name() const { return name_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const Eigen::Isometry3d& tool() const { return tool_; }
  TaskSpace task() const { return task_; }

  int dof() const { return static_cast<int>(joints_.size()); }
  int task_dim() const { return task_dimension(task_); }

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  bool within_limits(const JointVector& q, double tol = 0.0) const;

  /// Upper bound on the distance from the base to the tool point: the sum of
  /// link and tool translation lengths.
  double reach() const;

  /// Same geometry, different operational space.
  ChainModel with_task(TaskSpace task) const;

 private:
  std::string name_;
  std::vector<JointSpec> joints_;
  Eigen::Isometry3d tool_;
  TaskSpace task_;
};

/// n revolute joints about z with equal links along x, tracking planar
/// position. Throws InvalidArgument for n < 1 or link_length <= 0.
ChainModel planar_chain(int n, double link_length = 1.0);

Pose forward_kinematics(const ChainModel& chain, const JointVector& q);

/// Geometric Jacobian at the tool point (p x n), translation rows first,
/// angular rows in the base frame. Only the rows of the chain's task space
/// are returned.
Eigen::MatrixXd geometric_jacobian(const ChainModel& chain, const JointVector& q);

struct JacobianBundle {
  Eigen::MatrixXd jacobian;               // p x n
  std::vector<Eigen::MatrixXd> partials;  // n entries, each p x n: dJ/dq_i
};

/// Jacobian together with its analytic partial derivatives with respect to
/// each joint coordinate.
JacobianBundle jacobian_partials(const ChainModel& chain, const JointVector& q);

/// M = J J^T. `degenerate` is set when the smallest eigenvalue is not above
/// kSpdEpsilon, in which case `spd` is empty.
struct Manipulability {
  SymMatrix matrix;
  bool degenerate = false;
  std::optional<SpdMatrix> spd;
};

Manipulability manipulability_matrix(const Eigen::MatrixXd& jacobian);

/// Task-space coordinates of the tool position (first p_pos components).
Eigen::VectorXd task_position(const ChainModel& chain, const Pose& pose);

/// Error goal - current in task coordinates. For Pose6d the last three rows
/// hold the rotation vector of R_goal * R_current^T.
Eigen::VectorXd task_error(const ChainModel& chain, const Pose& goal, const Pose& current);

/// Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi].
Eigen::Vector3d rotation_vector(const Eigen::Quaterniond& q);

}  // namespace singidx
