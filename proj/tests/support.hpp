#pragma once

// Test-side oracles and generators. Nothing here calls into the library
// routine it is used to check.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace testsupport {

inline constexpr double kPi = 3.14159265358979323846;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

  Eigen::MatrixXd gaussian(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  Eigen::VectorXd uniform_vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  Eigen::MatrixXd orthogonal(int n) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, n));
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  }

  /// Q diag(exp(u)) Q^T with u uniform in [-spread, spread].
  Eigen::MatrixXd spd(int n, double spread = 2.0) {
    const Eigen::MatrixXd q = orthogonal(n);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = std::exp(uniform(-spread, spread));
    Eigen::MatrixXd m = q * d.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
  }

  Eigen::MatrixXd symmetric(int n) {
    const Eigen::MatrixXd g = gaussian(n, n);
    return 0.5 * (g + g.transpose());
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// Central difference of a scalar function along coordinate i.
inline double central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                 int i, double h) {
  Eigen::VectorXd xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) g(i) = central_difference(f, x, i, h);
  return g;
}

/// Symmetric eigen-decomposition log, used as an oracle for SPD input.
inline Eigen::MatrixXd eig_log(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal() * es.eigenvectors().transpose();
}

/// Relative error with an absolute floor for tiny references.
inline double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& ref, double floor = 1e-8) {
  return (got - ref).norm() / std::max(ref.norm(), floor);
}

// ---------------------------------------------------------------------------
// Independent forward kinematics: re-reads a chain file with its own parser
// and multiplies plain 4x4 homogeneous matrices.

struct RawJoint {
  bool prismatic = false;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double a = 0, alpha = 0, d = 0, theta0 = 0;
};

struct RawChain {
  std::vector<RawJoint> joints;
  Eigen::Matrix4d tool = Eigen::Matrix4d::Identity();
};

inline std::vector<double> raw_numbers(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

inline RawChain raw_chain(const std::string& path) {
  RawChain c;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "joint") {
      RawJoint j;
      std::string kind;
      ls >> kind;
      j.prismatic = kind == "prismatic";
      while (ls >> word) {
        const auto eq = word.find('=');
        const std::string key = word.substr(0, eq);
        const std::vector<double> v = raw_numbers(word.substr(eq + 1));
        if (key == "axis") j.axis = Eigen::Vector3d(v[0], v[1], v[2]).normalized();
        if (key == "dh") {
          j.a = v[0];
          j.alpha = v[1];
          j.d = v[2];
          j.theta0 = v[3];
        }
      }
      c.joints.push_back(j);
    } else if (word == "tool") {
      ls >> word;
      const std::vector<double> v = raw_numbers(word.substr(word.find('=') + 1));
      const Eigen::Quaterniond q(v[3], v[4], v[5], v[6]);
      c.tool.block<3, 3>(0, 0) = q.normalized().toRotationMatrix();
      c.tool.block<3, 1>(0, 3) = Eigen::Vector3d(v[0], v[1], v[2]);
    }
  }
  return c;
}

inline Eigen::Matrix4d rot_z(double t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = std::cos(t);
  m(0, 1) = -std::sin(t);
  m(1, 0) = std::sin(t);
  m(1, 1) = std::cos(t);
  return m;
}

inline Eigen::Matrix4d rot_x(double t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(1, 1) = std::cos(t);
  m(1, 2) = -std::sin(t);
  m(2, 1) = std::sin(t);
  m(2, 2) = std::cos(t);
  return m;
}

inline Eigen::Matrix4d translation(double x, double y, double z) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 3) = x;
  m(1, 3) = y;
  m(2, 3) = z;
  return m;
}

/// Rodrigues rotation about a unit axis, as a 4x4 matrix.
inline Eigen::Matrix4d rot_axis(const Eigen::Vector3d& k, double t) {
  Eigen::Matrix3d kx;
  kx << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = Eigen::Matrix3d::Identity() + std::sin(t) * kx + (1 - std::cos(t)) * kx * kx;
  return m;
}

inline Eigen::Matrix4d raw_fk(const RawChain& c, const Eigen::VectorXd& q) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (std::size_t i = 0; i < c.joints.size(); ++i) {
    const RawJoint& j = c.joints[i];
    const double v = q(static_cast<Eigen::Index>(i));
    const Eigen::Matrix4d motion =
        j.prismatic ? translation(v * j.axis.x(), v * j.axis.y(), v * j.axis.z()) : rot_axis(j.axis, v);
    const Eigen::Matrix4d link = rot_z(j.theta0) * translation(0, 0, j.d) * translation(j.a, 0, 0) * rot_x(j.alpha);
    t = t * motion * link;
  }
  return t * c.tool;
}

inline std::string chain_path(const std::string& name) { return std::string(SINGIDX_DATA_DIR) + "/chains/" + name; }

}  // namespace testsupport
