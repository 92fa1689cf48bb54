#pragma once

#include "kinnet/quat.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kinnet {

struct Joint {
  std::string name;
  int parent = -1;
  // Bone offset from the parent's T-pose position (centimeters). For the root
  // this is the root's T-pose position above the ground.
  Vec3 offset = Vec3::Zero();
};

// Joint tree in topological order: joint 0 is the root, parent(i) < i.
class Skeleton {
 public:
  Skeleton() = default;
  Skeleton(std::string name, std::vector<Joint> joints);

  // Builds a skeleton from absolute T-pose joint positions.
  static Skeleton from_tpose(std::string name, std::span<const std::string> names,
                             std::span<const int> parents, std::span<const Vec3> positions);

  const std::string& name() const { return name_; }
  std::size_t size() const { return joints_.size(); }
  const Joint& joint(std::size_t i) const { return joints_[i]; }
  const std::vector<Joint>& joints() const { return joints_; }
  int parent(std::size_t i) const { return joints_[i].parent; }

  // Bone offset used by forward kinematics; zero for the root.
  const Vec3& bone(std::size_t i) const { return bones_[i]; }
  const Vec3& root_position() const { return joints_[0].offset; }

  // T-pose joint positions with the root at the origin.
  const std::vector<Vec3>& local_tpose() const { return local_tpose_; }

  // Head-to-toe vertical extent of the T-pose.
  double height() const { return height_; }

  std::optional<std::size_t> find(std::string_view joint_name) const;
  std::size_t index_of(std::string_view joint_name) const;

  // Concatenated bone offsets of joints 1..N-1, divided by `scale`.
  std::vector<double> bone_features(double scale) const;

  // Same topology with every offset (including the root's) multiplied by `factor`.
  Skeleton scaled(double factor) const;

  bool same_topology(const Skeleton& other) const;

 private:
  std::string name_;
  std::vector<Joint> joints_;
  std::vector<Vec3> bones_;
  std::vector<Vec3> local_tpose_;
  double height_ = 0.0;
};

// The 22-joint set every model in this project operates on.
inline constexpr std::size_t kCanonicalJointCount = 22;
extern const std::array<std::string_view, kCanonicalJointCount> kCanonicalJointNames;
extern const std::array<int, kCanonicalJointCount> kCanonicalParents;

// Joints whose trajectories are exported for end-effector analysis.
extern const std::array<std::string_view, 6> kEndEffectorNames;

}  // namespace kinnet
