#include "kinnet/synthetic.hpp"

#include "kinnet/errors.hpp"
#include "kinnet/fk.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace kinnet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;

enum Group { kSpineGroup, kHeadGroup, kHipsGroup, kLegsGroup, kShoulderGroup, kArmsGroup, kNone };

struct TemplateJoint {
  Vec3 offset;
  Group group;
};

// Offsets indexed like kCanonicalJointNames.
const std::array<TemplateJoint, kCanonicalJointCount>& template_joints() {
  static const std::array<TemplateJoint, kCanonicalJointCount> joints = {{
      {{0, 100, 0}, kNone},            // Root
      {{0, 10, 0}, kSpineGroup},       // Spine
      {{0, 10, 0}, kSpineGroup},       // Spine1
      {{0, 10, 0}, kSpineGroup},       // Spine2
      {{0, 15, 0}, kHeadGroup},        // Neck
      {{0, 12, 0}, kHeadGroup},        // Head
      {{9, -5, 0}, kHipsGroup},        // LeftUpLeg
      {{0, -42, 0}, kLegsGroup},       // LeftLeg
      {{0, -42, 0}, kLegsGroup},       // LeftFoot
      {{0, -8, 12}, kLegsGroup},       // LeftToeBase
      {{-9, -5, 0}, kHipsGroup},       // RightUpLeg
      {{0, -42, 0}, kLegsGroup},       // RightLeg
      {{0, -42, 0}, kLegsGroup},       // RightFoot
      {{0, -8, 12}, kLegsGroup},       // RightToeBase
      {{4, 12, 0}, kShoulderGroup},    // LeftShoulder
      {{12, 0, 0}, kArmsGroup},        // LeftArm
      {{26, 0, 0}, kArmsGroup},        // LeftForeArm
      {{24, 0, 0}, kArmsGroup},        // LeftHand
      {{-4, 12, 0}, kShoulderGroup},   // RightShoulder
      {{-12, 0, 0}, kArmsGroup},       // RightArm
      {{-26, 0, 0}, kArmsGroup},       // RightForeArm
      {{-24, 0, 0}, kArmsGroup},       // RightHand
  }};
  return joints;
}

enum J {
  kRoot, kSpine, kSpine1, kSpine2, kNeck, kHead,
  kLUpLeg, kLLeg, kLFoot, kLToe, kRUpLeg, kRLeg, kRFoot, kRToe,
  kLShoulder, kLArm, kLForeArm, kLHand, kRShoulder, kRArm, kRForeArm, kRHand
};

// Joint angles of one frame, (x, y, z) degrees per joint.
using Angles = std::array<Vec3, kCanonicalJointCount>;

Angles zero_angles() {
  Angles a;
  a.fill(Vec3::Zero());
  return a;
}

struct RootState {
  Vec3 offset = Vec3::Zero();  // displacement from the T-pose root, template cm
  double yaw = 0.0;
};

double wave(double t, double freq, double phase) {
  return std::sin(2.0 * kPi * freq * t + phase);
}

void rest_arms(Angles& a, double down) {
  // Arms hang from the T-pose by rotating about z.
  a[kLArm] = {0, 0, -down};
  a[kRArm] = {0, 0, down};
}

Angles walk(const MotionParams& p, double t) {
  Angles a = zero_angles();
  const double s = wave(t, p.frequency, p.phase);
  const double c = wave(t, p.frequency, p.phase + kPi / 2);
  const double amp = p.amplitude;
  a[kLUpLeg] = {28 * amp * s, 0, 0};
  a[kRUpLeg] = {-28 * amp * s, 0, 0};
  a[kLLeg] = {-22 * amp * (1 + c), 0, 0};
  a[kRLeg] = {-22 * amp * (1 - c), 0, 0};
  a[kLFoot] = {10 * amp * c, 0, 0};
  a[kRFoot] = {-10 * amp * c, 0, 0};
  rest_arms(a, 70);
  a[kLArm].x() = -20 * amp * s;
  a[kRArm].x() = 20 * amp * s;
  a[kLForeArm] = {0, 10 * amp * s, -15};
  a[kRForeArm] = {0, -10 * amp * s, 15};
  a[kSpine] = {4, 8 * amp * s, 0};
  a[kSpine1] = {0, 6 * amp * s, 0};
  a[kNeck] = {0, -6 * amp * s, 0};
  a[kHead] = {3 * c, 0, 0};
  return a;
}

Angles arm_wave(const MotionParams& p, double t) {
  Angles a = zero_angles();
  const double s = wave(t, p.frequency, p.phase);
  const double amp = p.amplitude;
  rest_arms(a, 65);
  a[kRArm] = {10 * s, 0, -(45 + 25 * amp * std::abs(s))};
  a[kRForeArm] = {0, 0, -(20 + 35 * amp * s)};
  a[kRHand] = {0, 15 * s, -10 * s};
  a[kLArm] = {5 * s, 0, -60};
  a[kSpine] = {0, 0, 4 * amp * s};
  a[kSpine2] = {0, 10 * amp * s, 0};
  a[kHead] = {5, 15 * amp * s, 0};
  a[kLLeg] = {-5, 0, 0};
  a[kRLeg] = {-5, 0, 0};
  return a;
}

Angles idle_sway(const MotionParams& p, double t) {
  Angles a = zero_angles();
  const double s = wave(t, p.frequency, p.phase);
  const double c = wave(t, 0.5 * p.frequency, p.phase + 1.0);
  const double amp = p.amplitude;
  rest_arms(a, 72 + 5 * c);
  a[kLForeArm] = {0, 0, -10 - 5 * s};
  a[kRForeArm] = {0, 0, 10 + 5 * s};
  a[kRoot] = {0, 0, 3 * amp * s};
  a[kLUpLeg] = {0, 0, -3 * amp * s};
  a[kRUpLeg] = {0, 0, -3 * amp * s};
  a[kSpine] = {2 * c, 5 * amp * c, -4 * amp * s};
  a[kNeck] = {4 * c, 10 * amp * s, 0};
  a[kLLeg] = {-8 * amp * (1 + s), 0, 0};
  a[kRLeg] = {-8 * amp * (1 - s), 0, 0};
  return a;
}

Angles turn_in_place(const MotionParams& p, double t) {
  Angles a = zero_angles();
  const double s = wave(t, p.frequency, p.phase);
  const double amp = p.amplitude;
  rest_arms(a, 60);
  a[kLUpLeg] = {20 * amp * std::max(s, 0.0), 0, 0};
  a[kRUpLeg] = {20 * amp * std::max(-s, 0.0), 0, 0};
  a[kLLeg] = {-30 * amp * std::max(s, 0.0), 0, 0};
  a[kRLeg] = {-30 * amp * std::max(-s, 0.0), 0, 0};
  a[kLForeArm] = {0, 0, -25};
  a[kRForeArm] = {0, 0, 25};
  a[kSpine] = {0, 12 * amp * s, 0};
  a[kHead] = {0, -10 * amp * s, 0};
  return a;
}

RootState root_motion(const MotionParams& p, double t, std::size_t frame) {
  RootState r;
  const double s = wave(t, p.frequency, p.phase);
  const double f = static_cast<double>(frame);
  switch (p.kind) {
    case MotionKind::kWalk:
      r.yaw = p.start_yaw + p.turn_rate * f;
      r.offset.y() = -2.0 * p.amplitude * std::abs(wave(t, p.frequency, p.phase + kPi / 2));
      break;
    case MotionKind::kArmWave:
      r.yaw = p.start_yaw + 5.0 * s;
      break;
    case MotionKind::kIdleSway:
      r.yaw = p.start_yaw + 3.0 * wave(t, 0.3 * p.frequency, p.phase);
      r.offset.x() = 3.0 * p.amplitude * s;
      break;
    case MotionKind::kTurnInPlace:
      r.yaw = p.start_yaw + p.turn_rate * f;
      r.offset.y() = -1.5 * p.amplitude * std::abs(s);
      break;
  }
  return r;
}

}  // namespace

Quaternion euler_xyz(double x_deg, double y_deg, double z_deg) {
  const Eigen::Quaterniond h = Eigen::AngleAxisd(x_deg * kDegToRad, Vec3::UnitX()) *
                               Eigen::AngleAxisd(y_deg * kDegToRad, Vec3::UnitY()) *
                               Eigen::AngleAxisd(z_deg * kDegToRad, Vec3::UnitZ());
  Quaternion q{h.w(), h.x(), h.y(), h.z()};
  return q.r < 0.0 ? -q : q;
}

Skeleton template_skeleton() {
  return make_character("template", BoneScales{});
}

Skeleton make_character(const std::string& name, const BoneScales& scales) {
  const auto values = scales.values();
  for (double v : values) {
    if (!(v >= kMinBoneScale && v <= kMaxBoneScale)) {
      throw Error("bone scale outside [0.6, 1.6]");
    }
  }
  std::vector<Joint> joints(kCanonicalJointCount);
  for (std::size_t n = 0; n < kCanonicalJointCount; ++n) {
    const TemplateJoint& tj = template_joints()[n];
    joints[n].name = std::string(kCanonicalJointNames[n]);
    joints[n].parent = kCanonicalParents[n];
    joints[n].offset = tj.group == kNone ? Vec3::Zero() : Vec3(tj.offset * values[tj.group]);
  }
  // Lift the root so the lowest joint is just above the ground.
  std::vector<Vec3> local(kCanonicalJointCount, Vec3::Zero());
  double lowest = 0.0;
  for (std::size_t n = 1; n < kCanonicalJointCount; ++n) {
    local[n] = local[joints[n].parent] + joints[n].offset;
    lowest = std::min(lowest, local[n].y());
  }
  joints[0].offset = Vec3(0.0, -lowest + 3.0 * scales.legs, 0.0);
  return Skeleton(name, std::move(joints));
}

BoneScales random_bone_scales(Rng& rng) {
  BoneScales s;
  s.spine = uniform(rng, 0.7, 1.5);
  s.head = uniform(rng, 0.7, 1.4);
  s.hips = uniform(rng, 0.7, 1.5);
  s.legs = uniform(rng, 0.65, 1.5);
  s.shoulders = uniform(rng, 0.7, 1.5);
  s.arms = uniform(rng, 0.65, 1.5);
  return s;
}

const char* motion_kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::kWalk:
      return "walk";
    case MotionKind::kArmWave:
      return "arm-wave";
    case MotionKind::kIdleSway:
      return "idle-sway";
    case MotionKind::kTurnInPlace:
      return "turn-in-place";
  }
  return "unknown";
}

MotionParams random_motion_params(Rng& rng, MotionKind kind) {
  MotionParams p;
  p.kind = kind;
  p.amplitude = uniform(rng, 0.6, 1.2);
  p.phase = uniform(rng, 0.0, 2.0 * kPi);
  p.start_yaw = uniform(rng, -180.0, 180.0);
  switch (kind) {
    case MotionKind::kWalk:
      p.frequency = uniform(rng, 0.8, 1.4);
      p.speed = uniform(rng, 1.0, 3.0);
      p.turn_rate = uniform(rng, -0.8, 0.8);
      break;
    case MotionKind::kArmWave:
      p.frequency = uniform(rng, 0.8, 2.0);
      p.speed = 0.0;
      break;
    case MotionKind::kIdleSway:
      p.frequency = uniform(rng, 0.3, 0.8);
      p.speed = 0.0;
      break;
    case MotionKind::kTurnInPlace:
      p.frequency = uniform(rng, 0.8, 1.5);
      p.speed = 0.0;
      p.turn_rate = (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * uniform(rng, 1.5, 4.0);
      break;
  }
  return p;
}

Performance generate_performance(const MotionParams& params, std::size_t frames, double fps) {
  if (frames < 2) {
    throw Error("a performance needs at least 2 frames");
  }
  const Vec3 tpose_root = template_skeleton().root_position();
  Performance perf;
  perf.fps = fps;
  perf.rotations.resize(frames);
  perf.template_root.resize(frames);
  Vec3 travelled = Vec3::Zero();
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / fps;
    Angles angles = zero_angles();
    switch (params.kind) {
      case MotionKind::kWalk:
        angles = walk(params, t);
        break;
      case MotionKind::kArmWave:
        angles = arm_wave(params, t);
        break;
      case MotionKind::kIdleSway:
        angles = idle_sway(params, t);
        break;
      case MotionKind::kTurnInPlace:
        angles = turn_in_place(params, t);
        break;
    }
    const RootState root = root_motion(params, t, f);
    Rotations& q = perf.rotations[f];
    q.resize(kCanonicalJointCount);
    for (std::size_t n = 0; n < kCanonicalJointCount; ++n) {
      q[n] = euler_xyz(angles[n].x(), angles[n].y(), angles[n].z());
    }
    q[0] = quat_from_rotmat(yaw_matrix(root.yaw) * quat_to_rotmat(q[0]));
    perf.template_root[f] = tpose_root + travelled + root.offset;
    // Walk toward the facing direction, +z turned by the heading.
    travelled += yaw_matrix(root.yaw) * Vec3(0.0, 0.0, params.speed);
  }
  return perf;
}

std::vector<Pose> perform_absolute(const Performance& performance, const Skeleton& character) {
  if (character.size() != kCanonicalJointCount) {
    throw Error("performances need the canonical 22-joint skeleton");
  }
  const Skeleton templ = template_skeleton();
  const double ratio = character.height() / templ.height();
  std::vector<Pose> absolute(performance.rotations.size());
  for (std::size_t f = 0; f < absolute.size(); ++f) {
    const Vec3 root =
        character.root_position() + ratio * (performance.template_root[f] - templ.root_position());
    Pose pose = fk_forward(performance.rotations[f], character);
    for (Vec3& p : pose) {
      p += root;
    }
    absolute[f] = std::move(pose);
  }
  return absolute;
}

MotionClip perform(const Performance& performance, const Skeleton& character) {
  const std::vector<Pose> absolute = perform_absolute(performance, character);
  return preprocess(absolute, character, performance.fps, &performance.rotations);
}

}  // namespace kinnet
