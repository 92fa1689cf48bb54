#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace kinnet {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

// Quaternion r + i*I + j*J + k*K. Storage order is (r, i, j, k).
struct Quaternion {
  double r = 1.0;
  double i = 0.0;
  double j = 0.0;
  double k = 0.0;

  static Quaternion identity() { return {}; }
  static Quaternion from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

  Vec4 vec() const { return {r, i, j, k}; }
  double norm() const { return vec().norm(); }
  Quaternion operator-() const { return {-r, -i, -j, -k}; }
};

// Minimum norm accepted by quat_normalize.
inline constexpr double kQuatNormEpsilon = 1e-8;

// Pitch (degrees) past which the twist-angle derivative is frozen.
inline constexpr double kGimbalClampDegrees = 89.99;

// Rotation matrix of a unit quaternion, laid out exactly as
//
//   | 1-2(j²+k²)   2(ij+kr)     2(ik-jr)   |
//   | 2(ij-kr)     1-2(i²+k²)   2(jk+ir)   |
//   | 2(ik+jr)     2(jk-ir)     1-2(i²+j²) |
//
// This is the transpose of the Hamilton active-rotation matrix: the quaternion
// cos(θ/2) + sin(θ/2)·axis maps to a rotation by -θ about axis. All kinematics
// in this library use this matrix; quat_from_rotmat is its exact inverse.
// Throws NumericError on non-finite input.
Mat3 quat_to_rotmat(const Quaternion& q);

// Vector-Jacobian product of quat_to_rotmat: returns dL/dq given dL/dR.
Quaternion quat_to_rotmat_grad(const Quaternion& q, const Mat3& upstream);

// Returns q such that quat_to_rotmat(q) == rotation (up to rounding), with r >= 0.
Quaternion quat_from_rotmat(const Mat3& rotation);

// v / |v|. Throws NumericError("degenerate quaternion output") when
// |v| <= kQuatNormEpsilon.
Quaternion quat_normalize(const Vec4& v);

// dL/dv for u = v/|v| given dL/du.
Vec4 quat_normalize_grad(const Vec4& v, const Vec4& upstream);

// Quaternion cos(θ/2) + sin(θ/2)·axis (Hamilton convention, axis normalized).
Quaternion axis_angle_quat(const Vec3& axis, double degrees);

// Active rotation matrix about `axis` by `degrees` (Rodrigues).
Mat3 axis_angle_matrix(const Vec3& axis, double degrees);

// q such that quat_to_rotmat(q) = quat_to_rotmat(a) * quat_to_rotmat(b).
Quaternion quat_compose(const Quaternion& a, const Quaternion& b);

// Y angle (degrees, in (-180, 180]) of the intrinsic X-Y-Z Euler decomposition
// of the rotation q represents in the Hamilton convention. Of the two valid
// decompositions, the one with the smaller |x| + |z| is used, so pure
// y-rotations round-trip over the whole circle.
double quat_twist_angle_y(const Quaternion& q);

// d(twist angle)/dq, degrees per unit. Near gimbal lock the derivative is
// evaluated at kGimbalClampDegrees instead of diverging.
Quaternion quat_twist_angle_y_grad(const Quaternion& q);

}  // namespace kinnet
