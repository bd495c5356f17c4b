#include "singidx/chain_io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "singidx/error.hpp"

namespace singidx {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

class LineParser {
 public:
  LineParser(std::string source, int line) : source_(std::move(source)), line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << source_ << ":" << line_ << ": " << msg;
    throw ParseError(os.str(), line_);
  }

  // Splits "key=v1,v2,..." and checks the key and value count.
  std::vector<double> numbers(const std::string& token, const std::string& key, std::size_t count) const {
    const auto eq = token.find('=');
    if (eq == std::string::npos || token.substr(0, eq) != key) fail("expected '" + key + "=...', got '" + token + "'");
    std::vector<double> values;
    std::stringstream ss(token.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (item.empty() || end != item.c_str() + item.size() || !std::isfinite(v)) {
        fail("field '" + key + "': '" + item + "' is not a finite number");
      }
      values.push_back(v);
    }
    if (values.size() != count) {
      std::ostringstream os;
      os << "field '" << key << "' expects " << count << " values, got " << values.size();
      fail(os.str());
    }
    return values;
  }

  static std::string key_of(const std::string& token) { return token.substr(0, token.find('=')); }

 private:
  std::string source_;
  int line_;
};

TaskSpace parse_task(const LineParser& lp, const std::string& token) {
  if (LineParser::key_of(token) != "task") lp.fail("expected 'task=...', got '" + token + "'");
  const std::string v = token.substr(token.find('=') + 1);
  if (v == "position2d") return TaskSpace::Position2d;
  if (v == "position3d") return TaskSpace::Position3d;
  if (v == "pose6d") return TaskSpace::Pose6d;
  lp.fail("unknown task '" + v + "'");
}

}  // namespace

Eigen::Isometry3d dh_transform(double a, double alpha, double d, double theta0) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.rotate(Eigen::AngleAxisd(theta0, Eigen::Vector3d::UnitZ()));
  t.translate(Eigen::Vector3d(0.0, 0.0, d));
  t.translate(Eigen::Vector3d(a, 0.0, 0.0));
  t.rotate(Eigen::AngleAxisd(alpha, Eigen::Vector3d::UnitX()));
  return t;
}

ChainModel parse_chain(std::istream& in, const std::string& source) {
  std::optional<std::string> name;
  TaskSpace task = TaskSpace::Position3d;
  std::vector<JointSpec> joints;
  Eigen::Isometry3d tool = Eigen::Isometry3d::Identity();
  bool have_tool = false;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const LineParser lp(source, line_no);
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;

    const std::string& kw = tokens[0];
    if (kw == "chain") {
      if (name) lp.fail("duplicate 'chain' header");
      if (tokens.size() != 3) lp.fail("expected 'chain <name> task=<...>'");
      name = tokens[1];
      task = parse_task(lp, tokens[2]);
    } else if (kw == "joint") {
      if (!name) lp.fail("'joint' before 'chain' header");
      if (tokens.size() < 4 || tokens.size() > 5) {
        lp.fail("expected 'joint <revolute|prismatic> axis=<x,y,z> dh=<a,alpha,d,theta0> [limits=<lo,hi>]'");
      }
      JointSpec joint;
      if (tokens[1] == "revolute") {
        joint.kind = JointKind::Revolute;
      } else if (tokens[1] == "prismatic") {
        joint.kind = JointKind::Prismatic;
      } else {
        lp.fail("unknown joint kind '" + tokens[1] + "'");
      }
      const auto axis = lp.numbers(tokens[2], "axis", 3);
      const Eigen::Vector3d a(axis[0], axis[1], axis[2]);
      // Near-unit axes (rounded decimals) are normalized; anything else is
      // rejected by ChainModel validation.
      joint.axis = std::abs(a.norm() - 1.0) < 1e-6 ? a.normalized() : a;
      const auto dh = lp.numbers(tokens[3], "dh", 4);
      joint.link = dh_transform(dh[0], dh[1], dh[2], dh[3]);
      joint.limits = {-kTwoPi, kTwoPi};
      if (tokens.size() == 5) {
        const auto lim = lp.numbers(tokens[4], "limits", 2);
        joint.limits = {lim[0], lim[1]};
      }
      joints.push_back(joint);
    } else if (kw == "tool") {
      if (!name) lp.fail("'tool' before 'chain' header");
      if (have_tool) lp.fail("duplicate 'tool' line");
      if (tokens.size() != 2) lp.fail("expected 'tool offset=<x,y,z,qw,qx,qy,qz>'");
      const auto v = lp.numbers(tokens[1], "offset", 7);
      Eigen::Quaterniond rot(v[3], v[4], v[5], v[6]);
      if (std::abs(rot.norm() - 1.0) > 1e-6) throw ValidationError(source + ": tool quaternion is not unit");
      tool = Eigen::Isometry3d::Identity();
      tool.translate(Eigen::Vector3d(v[0], v[1], v[2]));
      tool.rotate(rot.normalized());
      have_tool = true;
    } else {
      lp.fail("unknown keyword '" + kw + "'");
    }
  }
  if (!name) throw ParseError(source + ": missing 'chain' header", line_no);
  return ChainModel(*name, std::move(joints), tool, task);
}

ChainModel load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open chain file");
  return parse_chain(in, path);
}

}  // namespace singidx
