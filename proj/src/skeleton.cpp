#include "kinnet/skeleton.hpp"

#include "kinnet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kinnet {

const std::array<std::string_view, kCanonicalJointCount> kCanonicalJointNames = {
    "Root",         "Spine",       "Spine1",        "Spine2",       "Neck",
    "Head",         "LeftUpLeg",   "LeftLeg",       "LeftFoot",     "LeftToeBase",
    "RightUpLeg",   "RightLeg",    "RightFoot",     "RightToeBase", "LeftShoulder",
    "LeftArm",      "LeftForeArm", "LeftHand",      "RightShoulder", "RightArm",
    "RightForeArm", "RightHand"};

const std::array<int, kCanonicalJointCount> kCanonicalParents = {
    -1, 0, 1, 2, 3, 4,     // spine chain
    0,  6, 7, 8,           // left leg
    0,  10, 11, 12,        // right leg
    3,  14, 15, 16,        // left arm
    3,  18, 19, 20};       // right arm

const std::array<std::string_view, 6> kEndEffectorNames = {
    "LeftHand", "RightHand", "LeftFoot", "LeftToeBase", "RightFoot", "RightToeBase"};

Skeleton::Skeleton(std::string name, std::vector<Joint> joints)
    : name_(std::move(name)), joints_(std::move(joints)) {
  if (joints_.size() < 2) {
    throw Error("skeleton needs at least 2 joints");
  }
  if (joints_[0].parent != -1) {
    throw Error("skeleton root must not have a parent");
  }
  for (std::size_t i = 1; i < joints_.size(); ++i) {
    const int p = joints_[i].parent;
    if (p < 0 || p >= static_cast<int>(i)) {
      throw Error("joint '" + joints_[i].name + "' breaks topological order (parent " +
                  std::to_string(p) + ")");
    }
  }
  for (const Joint& j : joints_) {
    if (!j.offset.allFinite()) {
      throw NumericError("non-finite offset for joint '" + j.name + "'");
    }
  }

  bones_.resize(joints_.size());
  local_tpose_.resize(joints_.size());
  bones_[0] = Vec3::Zero();
  local_tpose_[0] = Vec3::Zero();
  for (std::size_t i = 1; i < joints_.size(); ++i) {
    bones_[i] = joints_[i].offset;
    local_tpose_[i] = local_tpose_[joints_[i].parent] + bones_[i];
  }
  double lo = 0.0;
  double hi = 0.0;
  for (const Vec3& p : local_tpose_) {
    lo = std::min(lo, p.y());
    hi = std::max(hi, p.y());
  }
  height_ = hi - lo;
  if (!(height_ > 0.0)) {
    throw Error("skeleton '" + name_ + "' has zero height");
  }
}

Skeleton Skeleton::from_tpose(std::string name, std::span<const std::string> names,
                              std::span<const int> parents, std::span<const Vec3> positions) {
  if (names.size() != parents.size() || names.size() != positions.size()) {
    throw Error("skeleton name/parent/position counts differ");
  }
  std::vector<Joint> joints(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    joints[i].name = names[i];
    joints[i].parent = parents[i];
    if (parents[i] < 0) {
      joints[i].offset = positions[i];
    } else if (static_cast<std::size_t>(parents[i]) < names.size()) {
      joints[i].offset = positions[i] - positions[parents[i]];
    }
  }
  return Skeleton(std::move(name), std::move(joints));
}

std::optional<std::size_t> Skeleton::find(std::string_view joint_name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (joints_[i].name == joint_name) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t Skeleton::index_of(std::string_view joint_name) const {
  if (auto i = find(joint_name)) {
    return *i;
  }
  throw Error("skeleton '" + name_ + "' has no joint '" + std::string(joint_name) + "'");
}

std::vector<double> Skeleton::bone_features(double scale) const {
  std::vector<double> out;
  out.reserve(3 * (joints_.size() - 1));
  for (std::size_t i = 1; i < joints_.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      out.push_back(bones_[i][c] / scale);
    }
  }
  return out;
}

Skeleton Skeleton::scaled(double factor) const {
  std::vector<Joint> joints = joints_;
  for (Joint& j : joints) {
    j.offset *= factor;
  }
  return Skeleton(name_, std::move(joints));
}

bool Skeleton::same_topology(const Skeleton& other) const {
  if (size() != other.size()) {
    return false;
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (joints_[i].parent != other.joints_[i].parent || joints_[i].name != other.joints_[i].name) {
      return false;
    }
  }
  return true;
}

}  // namespace kinnet
