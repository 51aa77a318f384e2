#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace splatmotion {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Shortest-arc spherical interpolation; flips the far endpoint onto the
/// near hemisphere so the result never takes the long way round.
inline Quat slerp_shortest(const Quat& a, const Quat& b, double alpha) {
  Quat target = b;
  if (a.dot(b) < 0.0) target.coeffs() = -b.coeffs();
  return a.slerp(alpha, target).normalized();
}

/// Canonical sign (w >= 0) so equal rotations compare equal coefficient-wise.
inline Quat canonical(const Quat& q) {
  Quat out = q.normalized();
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

}  // namespace splatmotion
