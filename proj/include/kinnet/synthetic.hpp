#pragma once

#include "kinnet/motion.hpp"
#include "kinnet/rng.hpp"
#include "kinnet/skeleton.hpp"

#include <array>
#include <string>
#include <vector>

namespace kinnet {

// Per-group bone-length multipliers applied to the template skeleton.
// Left and right limbs always share a multiplier.
struct BoneScales {
  double spine = 1.0;
  double head = 1.0;
  double hips = 1.0;
  double legs = 1.0;
  double shoulders = 1.0;
  double arms = 1.0;

  std::array<double, 6> values() const { return {spine, head, hips, legs, shoulders, arms}; }
};

inline constexpr double kMinBoneScale = 0.6;
inline constexpr double kMaxBoneScale = 1.6;

// The 22-joint template in centimeters, facing +z with its left side at +x.
Skeleton template_skeleton();

// Template with scaled bones; the root is lifted so the lowest joint sits 3 cm
// (times the leg scale) above the ground.
Skeleton make_character(const std::string& name, const BoneScales& scales);
BoneScales random_bone_scales(Rng& rng);

enum class MotionKind { kWalk, kArmWave, kIdleSway, kTurnInPlace };
const char* motion_kind_name(MotionKind kind);

struct MotionParams {
  MotionKind kind = MotionKind::kWalk;
  double frequency = 1.0;   // Hz
  double amplitude = 1.0;   // multiplier on the nominal joint angles
  double phase = 0.0;       // radians
  double speed = 1.5;       // cm/frame of the template character
  double turn_rate = 0.0;   // degrees/frame
  double start_yaw = 0.0;   // degrees
};
MotionParams random_motion_params(Rng& rng, MotionKind kind);

// A character-independent performance: per-frame FK rotations (root included,
// heading baked into the root) and the template's root trajectory.
struct Performance {
  double fps = 30.0;
  std::vector<Rotations> rotations;
  std::vector<Vec3> template_root;
};
Performance generate_performance(const MotionParams& params, std::size_t frames, double fps = 30.0);

// Plays a performance on a character. The root trajectory is scaled by the
// character/template height ratio about the T-pose root position, then the
// result is preprocessed into local/global form carrying rotations.
MotionClip perform(const Performance& performance, const Skeleton& character);

// Absolute joint positions of a performance on a character.
std::vector<Pose> perform_absolute(const Performance& performance, const Skeleton& character);

// Joint rotation whose FK matrix equals the intrinsic X-Y-Z Euler product
// Rx(x)·Ry(y)·Rz(z) transposed; its twist angle is y when |x|, |z| < 90.
Quaternion euler_xyz(double x_deg, double y_deg, double z_deg);

}  // namespace kinnet
