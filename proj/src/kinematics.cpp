#include "singidx/kinematics.hpp"

#include <cmath>
#include <sstream>

#include "singidx/error.hpp"

namespace singidx {

namespace {

// World-frame quantities for every joint at a configuration.
struct ChainState {
  std::vector<Eigen::Vector3d> axes;     // joint axis in base frame
  std::vector<Eigen::Vector3d> origins;  // point on the axis (joint frame origin)
  Eigen::Isometry3d tool_frame = Eigen::Isometry3d::Identity();
};

void require_dof(const ChainModel& chain, const JointVector& q, const char* what) {
  if (q.size() != chain.dof()) {
    std::ostringstream os;
    os << what << ": expected " << chain.dof() << " joint values, got " << q.size();
    throw DimensionMismatch(os.str());
  }
}

Eigen::Isometry3d joint_motion(const JointSpec& joint, double value) {
  Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
  if (joint.kind == JointKind::Revolute) {
    m.linear() = Eigen::AngleAxisd(value, joint.axis).toRotationMatrix();
  } else {
    m.translation() = value * joint.axis;
  }
  return m;
}

ChainState chain_state(const ChainModel& chain, const JointVector& q) {
  ChainState s;
  const int n = chain.dof();
  s.axes.reserve(n);
  s.origins.reserve(n);
  Eigen::Isometry3d frame = Eigen::Isometry3d::Identity();
  for (int i = 0; i < n; ++i) {
    const JointSpec& joint = chain.joints()[i];
    s.axes.push_back(frame.linear() * joint.axis);
    s.origins.push_back(frame.translation());
    frame = frame * joint_motion(joint, q(i)) * joint.link;
  }
  s.tool_frame = frame * chain.tool();
  return s;
}

// Full 6 x n geometric Jacobian at the tool point.
Eigen::Matrix<double, 6, Eigen::Dynamic> full_jacobian(const ChainModel& chain, const ChainState& s) {
  const int n = chain.dof();
  const Eigen::Vector3d tip = s.tool_frame.translation();
  Eigen::Matrix<double, 6, Eigen::Dynamic> j(6, n);
  for (int i = 0; i < n; ++i) {
    if (chain.joints()[i].kind == JointKind::Revolute) {
      j.col(i).head<3>() = s.axes[i].cross(tip - s.origins[i]);
      j.col(i).tail<3>() = s.axes[i];
    } else {
      j.col(i).head<3>() = s.axes[i];
      j.col(i).tail<3>().setZero();
    }
  }
  return j;
}

Eigen::MatrixXd task_rows(TaskSpace task, const Eigen::MatrixXd& full) {
  switch (task) {
    case TaskSpace::Position2d: return full.topRows(2);
    case TaskSpace::Position3d: return full.topRows(3);
    case TaskSpace::Pose6d: return full;
  }
  return full;
}

}  // namespace

int task_dimension(TaskSpace task) {
  switch (task) {
    case TaskSpace::Position2d: return 2;
    case TaskSpace::Position3d: return 3;
    case TaskSpace::Pose6d: return 6;
  }
  return 0;
}

const char* to_string(TaskSpace task) {
  switch (task) {
    case TaskSpace::Position2d: return "position2d";
    case TaskSpace::Position3d: return "position3d";
    case TaskSpace::Pose6d: return "pose6d";
  }
  return "?";
}

ChainModel::ChainModel(std::string name, std::vector<JointSpec> joints, Eigen::Isometry3d tool, TaskSpace task)
    : name_(std::move(name)), joints_(std::move(joints)), tool_(tool), task_(task) {
  if (joints_.empty()) throw ValidationError("chain '" + name_ + "' has no joints");
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const JointSpec& joint = joints_[i];
    if (!joint.axis.allFinite() || std::abs(joint.axis.norm() - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "joint " << i << " of chain '" << name_ << "': axis is not a unit vector";
      throw ValidationError(os.str());
    }
    if (!(joint.limits.lower <= joint.limits.upper)) {
      std::ostringstream os;
      os << "joint " << i << " of chain '" << name_ << "': lower limit exceeds upper limit";
      throw ValidationError(os.str());
    }
  }
}

Eigen::VectorXd ChainModel::lower_limits() const {
  Eigen::VectorXd v(dof());
  for (int i = 0; i < dof(); ++i) v(i) = joints_[i].limits.lower;
  return v;
}

Eigen::VectorXd ChainModel::upper_limits() const {
  Eigen::VectorXd v(dof());
  for (int i = 0; i < dof(); ++i) v(i) = joints_[i].limits.upper;
  return v;
}

bool ChainModel::within_limits(const JointVector& q, double tol) const {
  if (q.size() != dof()) return false;
  for (int i = 0; i < dof(); ++i) {
    if (q(i) < joints_[i].limits.lower - tol || q(i) > joints_[i].limits.upper + tol) return false;
  }
  return true;
}

double ChainModel::reach() const {
  double r = tool_.translation().norm();
  for (const JointSpec& joint : joints_) {
    r += joint.link.translation().norm();
    if (joint.kind == JointKind::Prismatic) r += std::max(std::abs(joint.limits.lower), std::abs(joint.limits.upper));
  }
  return r;
}

ChainModel ChainModel::with_task(TaskSpace task) const { return ChainModel(name_, joints_, tool_, task); }

ChainModel planar_chain(int n, double link_length) {
  if (n < 1) throw InvalidArgument("planar_chain: need at least one joint");
  if (!(link_length > 0.0)) throw InvalidArgument("planar_chain: link length must be positive");
  std::vector<JointSpec> joints(n);
  for (JointSpec& joint : joints) {
    joint.kind = JointKind::Revolute;
    joint.axis = Eigen::Vector3d::UnitZ();
    joint.link = Eigen::Translation3d(link_length, 0.0, 0.0);
  }
  return ChainModel("planar" + std::to_string(n), std::move(joints), Eigen::Isometry3d::Identity(),
                    TaskSpace::Position2d);
}

Pose forward_kinematics(const ChainModel& chain, const JointVector& q) {
  require_dof(chain, q, "forward_kinematics");
  Eigen::Isometry3d frame = Eigen::Isometry3d::Identity();
  for (int i = 0; i < chain.dof(); ++i) {
    const JointSpec& joint = chain.joints()[i];
    frame = frame * joint_motion(joint, q(i)) * joint.link;
  }
  frame = frame * chain.tool();
  Pose pose;
  pose.position = frame.translation();
  pose.orientation = Eigen::Quaterniond(frame.linear()).normalized();
  return pose;
}

Eigen::MatrixXd geometric_jacobian(const ChainModel& chain, const JointVector& q) {
  require_dof(chain, q, "geometric_jacobian");
  return task_rows(chain.task(), full_jacobian(chain, chain_state(chain, q)));
}

JacobianBundle jacobian_partials(const ChainModel& chain, const JointVector& q) {
  require_dof(chain, q, "jacobian_partials");
  const int n = chain.dof();
  const ChainState s = chain_state(chain, q);
  const Eigen::Matrix<double, 6, Eigen::Dynamic> full = full_jacobian(chain, s);

  JacobianBundle bundle;
  bundle.jacobian = task_rows(chain.task(), full);
  bundle.partials.reserve(n);

  // Column i is (v_i, w_i). Joint j rigidly moves everything distal to it:
  //   j <= i, revolute j:  d(v_i, w_i) = (z_j x v_i, z_j x w_i)
  //   j <= i, prismatic j: no change
  //   j > i:               d v_i = w_i x v_j, d w_i = 0
  for (int j = 0; j < n; ++j) {
    const bool revolute_j = chain.joints()[j].kind == JointKind::Revolute;
    const Eigen::Vector3d z_j = s.axes[j];
    const Eigen::Vector3d v_j = full.col(j).head<3>();
    Eigen::Matrix<double, 6, Eigen::Dynamic> d = Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, n);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d v_i = full.col(i).head<3>();
      const Eigen::Vector3d w_i = full.col(i).tail<3>();
      if (j <= i) {
        if (revolute_j) {
          d.col(i).head<3>() = z_j.cross(v_i);
          d.col(i).tail<3>() = z_j.cross(w_i);
        }
      } else {
        d.col(i).head<3>() = w_i.cross(v_j);
      }
    }
    bundle.partials.push_back(task_rows(chain.task(), d));
  }
  return bundle;
}

Manipulability manipulability_matrix(const Eigen::MatrixXd& jacobian) {
  Manipulability out{SymMatrix(jacobian * jacobian.transpose()), false, std::nullopt};
  try {
    out.spd.emplace(out.matrix);
  } catch (const DegenerateMatrix&) {
    out.degenerate = true;
  }
  return out;
}

Eigen::VectorXd task_position(const ChainModel& chain, const Pose& pose) {
  return chain.task() == TaskSpace::Position2d ? Eigen::VectorXd(pose.position.head<2>())
                                               : Eigen::VectorXd(pose.position);
}

Eigen::VectorXd task_error(const ChainModel& chain, const Pose& goal, const Pose& current) {
  const Eigen::Vector3d dp = goal.position - current.position;
  switch (chain.task()) {
    case TaskSpace::Position2d: return dp.head<2>();
    case TaskSpace::Position3d: return dp;
    case TaskSpace::Pose6d: {
      Eigen::VectorXd e(6);
      e.head<3>() = dp;
      e.tail<3>() = rotation_vector(goal.orientation * current.orientation.conjugate());
      return e;
    }
  }
  return dp;
}

Eigen::Vector3d rotation_vector(const Eigen::Quaterniond& q) {
  Eigen::Quaterniond u = q.normalized();
  if (u.w() < 0.0) u.coeffs() *= -1.0;  // shortest rotation
  const double s = u.vec().norm();
  if (s < 1e-12) return 2.0 * u.vec();  // small-angle limit
  const double angle = 2.0 * std::atan2(s, u.w());
  return u.vec() * (angle / s);
}

}  // namespace singidx
