#include "kinnet/quat.hpp"

#include "kinnet/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kinnet {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void require_finite(const Quaternion& q) {
  if (!std::isfinite(q.r) || !std::isfinite(q.i) || !std::isfinite(q.j) ||
      !std::isfinite(q.k)) {
    throw NumericError("non-finite quaternion");
  }
}

double wrap_degrees(double deg) {
  double w = std::remainder(deg, 360.0);
  if (w <= -180.0) {
    w += 360.0;
  }
  return w;
}

struct TwistBranch {
  double y_degrees;
  // +1 when y = asin(h02), -1 when y = 180 - asin(h02).
  double sign;
  double pitch_degrees;
};

TwistBranch twist_branch(const Quaternion& q) {
  const double h00 = 1.0 - 2.0 * (q.j * q.j + q.k * q.k);
  const double h01 = 2.0 * (q.i * q.j - q.k * q.r);
  const double h02 = 2.0 * (q.i * q.k + q.j * q.r);
  const double h12 = 2.0 * (q.j * q.k - q.i * q.r);
  const double h22 = 1.0 - 2.0 * (q.i * q.i + q.j * q.j);

  const double pitch = std::asin(std::clamp(h02, -1.0, 1.0)) * kRadToDeg;
  const double x1 = std::atan2(-h12, h22) * kRadToDeg;
  const double z1 = std::atan2(-h01, h00) * kRadToDeg;
  const double x2 = wrap_degrees(x1 + 180.0);
  const double z2 = wrap_degrees(z1 + 180.0);

  if (std::abs(x2) + std::abs(z2) < std::abs(x1) + std::abs(z1)) {
    return {wrap_degrees(180.0 - pitch), -1.0, pitch};
  }
  return {wrap_degrees(pitch), 1.0, pitch};
}

}  // namespace

Mat3 quat_to_rotmat(const Quaternion& q) {
  require_finite(q);
  const double r = q.r, i = q.i, j = q.j, k = q.k;
  Mat3 m;
  m << 1.0 - 2.0 * (j * j + k * k), 2.0 * (i * j + k * r), 2.0 * (i * k - j * r),
      2.0 * (i * j - k * r), 1.0 - 2.0 * (i * i + k * k), 2.0 * (j * k + i * r),
      2.0 * (i * k + j * r), 2.0 * (j * k - i * r), 1.0 - 2.0 * (i * i + j * j);
  return m;
}

Quaternion quat_to_rotmat_grad(const Quaternion& q, const Mat3& g) {
  require_finite(q);
  const double r = q.r, i = q.i, j = q.j, k = q.k;
  Quaternion d{0.0, 0.0, 0.0, 0.0};
  // Each entry is quadratic in (r, i, j, k); accumulate g(a,b) * dM(a,b)/dq.
  d.r = 2.0 * (k * g(0, 1) - j * g(0, 2) - k * g(1, 0) + i * g(1, 2) +
               j * g(2, 0) - i * g(2, 1));
  d.i = 2.0 * (j * g(0, 1) + k * g(0, 2) + j * g(1, 0) + r * g(1, 2) +
               k * g(2, 0) - r * g(2, 1)) -
        4.0 * i * (g(1, 1) + g(2, 2));
  d.j = 2.0 * (i * g(0, 1) - r * g(0, 2) + i * g(1, 0) + k * g(1, 2) +
               r * g(2, 0) + k * g(2, 1)) -
        4.0 * j * (g(0, 0) + g(2, 2));
  d.k = 2.0 * (r * g(0, 1) + i * g(0, 2) - r * g(1, 0) + j * g(1, 2) +
               i * g(2, 0) + j * g(2, 1)) -
        4.0 * k * (g(0, 0) + g(1, 1));
  return d;
}

Quaternion quat_from_rotmat(const Mat3& rotation) {
  if (!rotation.allFinite()) {
    throw NumericError("non-finite rotation matrix");
  }
  // quat_to_rotmat is the transpose of the Hamilton matrix.
  const Mat3 hamilton = rotation.transpose();
  Eigen::Quaterniond e(hamilton);
  e.normalize();
  Quaternion q{e.w(), e.x(), e.y(), e.z()};
  if (q.r < 0.0) {
    q = -q;
  }
  return q;
}

Quaternion quat_normalize(const Vec4& v) {
  if (!v.allFinite()) {
    throw NumericError("non-finite quaternion");
  }
  const double n = v.norm();
  if (n <= kQuatNormEpsilon) {
    throw NumericError("degenerate quaternion output");
  }
  return Quaternion::from_vec(v / n);
}

Vec4 quat_normalize_grad(const Vec4& v, const Vec4& upstream) {
  const double n = v.norm();
  if (n <= kQuatNormEpsilon) {
    throw NumericError("degenerate quaternion output");
  }
  const Vec4 u = v / n;
  return (upstream - u * u.dot(upstream)) / n;
}

Quaternion axis_angle_quat(const Vec3& axis, double degrees) {
  const Vec3 a = axis.normalized();
  const double half = 0.5 * degrees * kDegToRad;
  const double s = std::sin(half);
  return {std::cos(half), s * a.x(), s * a.y(), s * a.z()};
}

Mat3 axis_angle_matrix(const Vec3& axis, double degrees) {
  return Eigen::AngleAxisd(degrees * kDegToRad, axis.normalized()).toRotationMatrix();
}

Quaternion quat_compose(const Quaternion& a, const Quaternion& b) {
  // M(q) = H(q)^T, so M(a) M(b) = H(b a)^T: the Hamilton product in reverse order.
  const Eigen::Quaterniond ea(a.r, a.i, a.j, a.k);
  const Eigen::Quaterniond eb(b.r, b.i, b.j, b.k);
  const Eigen::Quaterniond p = eb * ea;
  return {p.w(), p.x(), p.y(), p.z()};
}

double quat_twist_angle_y(const Quaternion& q) {
  require_finite(q);
  return twist_branch(q).y_degrees;
}

Quaternion quat_twist_angle_y_grad(const Quaternion& q) {
  require_finite(q);
  const TwistBranch branch = twist_branch(q);
  const double pitch = std::min(std::abs(branch.pitch_degrees), kGimbalClampDegrees);
  // y = asin(h02) with h02 = 2(ik + jr).
  const double scale = branch.sign * kRadToDeg / std::cos(pitch * kDegToRad);
  return {scale * 2.0 * q.j, scale * 2.0 * q.k, scale * 2.0 * q.r, scale * 2.0 * q.i};
}

}  // namespace kinnet
