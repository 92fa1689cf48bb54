#pragma once

#include "kinnet/quat.hpp"
#include "kinnet/skeleton.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kinnet {

using Pose = std::vector<Vec3>;
using Rotations = std::vector<Quaternion>;

// Root motion of one frame: displacement to the next frame expressed in this
// frame's heading coordinates (cm/frame), and heading change (degrees/frame).
struct GlobalMotion {
  Vec3 velocity = Vec3::Zero();
  double dyaw = 0.0;
};

// Free-form provenance carried through files and reports.
struct ClipInfo {
  std::string motion;
  std::string character;
  std::string source_character;
  std::string split;
  std::string scenario;
};

// A motion split into heading-free local poses and per-frame root motion.
struct MotionClip {
  Skeleton skeleton;
  double fps = 30.0;
  // Root position and heading of frame 0; apply_global integrates from here.
  Vec3 start_position = Vec3::Zero();
  double start_yaw = 0.0;
  std::vector<Pose> local;
  std::vector<GlobalMotion> global;
  // Optional heading-free per-joint rotations (FK convention) that reproduce `local`.
  std::vector<Rotations> rotations;
  ClipInfo info;

  std::size_t length() const { return local.size(); }
  bool has_rotations() const { return !rotations.empty(); }

  // Throws Error when lengths disagree, T < 2, or values are non-finite.
  void validate() const;

  // Frames [begin, begin + count) as a new clip; start state is re-derived.
  MotionClip window(std::size_t begin, std::size_t count) const;
};

// Active rotation by `degrees` about +y.
Mat3 yaw_matrix(double degrees);

// Heading of an absolute pose in degrees relative to the canonical facing
// direction cross(up, +x). Uses LeftUpLeg/RightUpLeg; nullopt when the hips
// are missing or the projected forward vector degenerates.
std::optional<double> heading_degrees(const Pose& absolute, const Skeleton& skeleton);

// Separates absolute joint positions (frames x joints) into local and global
// motion. `world_rotations`, when given, are the FK rotations that produced
// the poses; the clip then carries their heading-free counterparts.
MotionClip preprocess(const std::vector<Pose>& absolute, const Skeleton& skeleton,
                      double fps = 30.0,
                      const std::vector<Rotations>* world_rotations = nullptr);

// Integrates root motion and re-applies heading, reconstructing absolute poses.
// Frame 0 uses start_position / start_yaw; frame t+1 is reached by moving the
// root by yaw(t) * velocity(t) and turning by dyaw(t).
std::vector<Pose> apply_global(const std::vector<Pose>& local,
                               const std::vector<GlobalMotion>& global,
                               const Vec3& start_position = Vec3::Zero(),
                               double start_yaw = 0.0);

inline std::vector<Pose> world_positions(const MotionClip& clip) {
  return apply_global(clip.local, clip.global, clip.start_position, clip.start_yaw);
}

}  // namespace kinnet
