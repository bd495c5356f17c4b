#pragma once

// Line-oriented chain description files.
//
//   # comment
//   chain <name> task=<position2d|position3d|pose6d>
//   joint <revolute|prismatic> axis=<x,y,z> dh=<a,alpha,d,theta0> [limits=<lo,hi>]
//   tool offset=<x,y,z,qw,qx,qy,qz>
//
// Each joint's fixed link transform is the standard Denavit-Hartenberg
// product Rz(theta0) Tz(d) Tx(a) Rx(alpha), applied after the joint motion.
// Limits default to [-2 pi, 2 pi]. SI units and radians throughout.

#include <istream>
#include <string>

#include "singidx/kinematics.hpp"

namespace singidx {

/// Throws ParseError (with line number) for malformed input and
/// ValidationError for well-formed input that violates chain invariants.
ChainModel parse_chain(std::istream& in, const std::string& source = "<stream>");

/// Reads a chain file. Throws IoError when the file cannot be opened.
ChainModel load_chain(const std::string& path);

/// DH link transform Rz(theta0) Tz(d) Tx(a) Rx(alpha).
Eigen::Isometry3d dh_transform(double a, double alpha, double d, double theta0);

}  // namespace singidx
