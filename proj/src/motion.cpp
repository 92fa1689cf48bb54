#include "kinnet/motion.hpp"

#include "kinnet/errors.hpp"

#include <cmath>
#include <numbers>

namespace kinnet {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double wrap_degrees(double deg) {
  double w = std::remainder(deg, 360.0);
  if (w <= -180.0) {
    w += 360.0;
  }
  return w;
}

bool finite(const Pose& pose) {
  for (const Vec3& p : pose) {
    if (!p.allFinite()) {
      return false;
    }
  }
  return true;
}

}  // namespace

Mat3 yaw_matrix(double degrees) {
  return axis_angle_matrix(Vec3::UnitY(), degrees);
}

std::optional<double> heading_degrees(const Pose& absolute, const Skeleton& skeleton) {
  const auto left = skeleton.find("LeftUpLeg");
  const auto right = skeleton.find("RightUpLeg");
  if (!left || !right) {
    return std::nullopt;
  }
  const Vec3 across = absolute[*left] - absolute[*right];
  const Vec3 forward = Vec3::UnitY().cross(across);
  if (forward.norm() < 1e-6 * std::max(1.0, across.norm())) {
    return std::nullopt;
  }
  const Vec3 reference = Vec3::UnitY().cross(Vec3::UnitX());
  const double s = reference.cross(forward).y();
  const double c = reference.dot(forward);
  return std::atan2(s, c) * kRadToDeg;
}

void MotionClip::validate() const {
  if (local.size() < 2) {
    throw Error("motion clip needs at least 2 frames, got " + std::to_string(local.size()));
  }
  if (global.size() != local.size()) {
    throw Error("local/global length mismatch: " + std::to_string(local.size()) + " vs " +
                std::to_string(global.size()));
  }
  if (!rotations.empty() && rotations.size() != local.size()) {
    throw Error("rotation track length mismatch");
  }
  if (!(fps > 0.0) || !start_position.allFinite() || !std::isfinite(start_yaw)) {
    throw Error("invalid clip header values");
  }
  for (std::size_t t = 0; t < local.size(); ++t) {
    if (local[t].size() != skeleton.size()) {
      throw Error("frame " + std::to_string(t) + " has " + std::to_string(local[t].size()) +
                  " joints, skeleton has " + std::to_string(skeleton.size()));
    }
    if (!finite(local[t]) || !global[t].velocity.allFinite() || !std::isfinite(global[t].dyaw)) {
      throw NumericError("non-finite value in frame " + std::to_string(t));
    }
    if (std::abs(global[t].dyaw) >= 180.0) {
      throw Error("|dyaw| >= 180 in frame " + std::to_string(t));
    }
    if (!rotations.empty() && rotations[t].size() != skeleton.size()) {
      throw Error("rotation frame " + std::to_string(t) + " has wrong joint count");
    }
  }
}

MotionClip MotionClip::window(std::size_t begin, std::size_t count) const {
  if (begin + count > length() || count < 2) {
    throw Error("clip window out of range");
  }
  MotionClip out;
  out.skeleton = skeleton;
  out.fps = fps;
  out.info = info;
  // Advance the start state to `begin`.
  Vec3 root = start_position;
  double yaw = start_yaw;
  for (std::size_t t = 0; t < begin; ++t) {
    root += yaw_matrix(yaw) * global[t].velocity;
    yaw += global[t].dyaw;
  }
  out.start_position = root;
  out.start_yaw = wrap_degrees(yaw);
  out.local.assign(local.begin() + begin, local.begin() + begin + count);
  out.global.assign(global.begin() + begin, global.begin() + begin + count);
  if (!rotations.empty()) {
    out.rotations.assign(rotations.begin() + begin, rotations.begin() + begin + count);
  }
  return out;
}

MotionClip preprocess(const std::vector<Pose>& absolute, const Skeleton& skeleton, double fps,
                      const std::vector<Rotations>* world_rotations) {
  const std::size_t frames = absolute.size();
  if (frames < 2) {
    throw Error("preprocess needs at least 2 frames");
  }
  if (world_rotations && world_rotations->size() != frames) {
    throw Error("rotation track length mismatch");
  }
  for (std::size_t t = 0; t < frames; ++t) {
    if (absolute[t].size() != skeleton.size()) {
      throw Error("frame " + std::to_string(t) + " joint count does not match skeleton");
    }
    if (!finite(absolute[t])) {
      throw NumericError("non-finite position in frame " + std::to_string(t));
    }
  }

  // Unwrapped heading per frame; degenerate frames inherit the previous one.
  std::vector<double> yaw(frames, 0.0);
  double previous = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    double h = previous;
    if (auto measured = heading_degrees(absolute[t], skeleton)) {
      h = t == 0 ? *measured : previous + wrap_degrees(*measured - previous);
    }
    yaw[t] = h;
    previous = h;
  }

  MotionClip clip;
  clip.skeleton = skeleton;
  clip.fps = fps;
  clip.start_position = absolute[0][0];
  clip.start_yaw = yaw[0];
  clip.local.resize(frames);
  clip.global.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const Mat3 unyaw = yaw_matrix(-yaw[t]);
    const Vec3& root = absolute[t][0];
    Pose& local = clip.local[t];
    local.resize(skeleton.size());
    for (std::size_t j = 0; j < skeleton.size(); ++j) {
      local[j] = unyaw * (absolute[t][j] - root);
    }
    local[0].setZero();
    if (t + 1 < frames) {
      clip.global[t].velocity = unyaw * (absolute[t + 1][0] - root);
      clip.global[t].dyaw = yaw[t + 1] - yaw[t];
    }
  }
  clip.global[frames - 1] = clip.global[frames - 2];

  if (world_rotations) {
    clip.rotations = *world_rotations;
    for (std::size_t t = 0; t < frames; ++t) {
      Rotations& q = clip.rotations[t];
      if (q.size() != skeleton.size()) {
        throw Error("rotation frame " + std::to_string(t) + " has wrong joint count");
      }
      q[0] = quat_from_rotmat(yaw_matrix(-yaw[t]) * quat_to_rotmat(q[0]));
    }
  }
  return clip;
}

std::vector<Pose> apply_global(const std::vector<Pose>& local,
                               const std::vector<GlobalMotion>& global,
                               const Vec3& start_position, double start_yaw) {
  if (local.size() != global.size()) {
    throw Error("local/global length mismatch: " + std::to_string(local.size()) + " vs " +
                std::to_string(global.size()));
  }
  std::vector<Pose> world(local.size());
  Vec3 root = start_position;
  double yaw = start_yaw;
  for (std::size_t t = 0; t < local.size(); ++t) {
    const Mat3 turn = yaw_matrix(yaw);
    world[t].resize(local[t].size());
    for (std::size_t j = 0; j < local[t].size(); ++j) {
      world[t][j] = root + turn * local[t][j];
    }
    root += turn * global[t].velocity;
    yaw += global[t].dyaw;
  }
  return world;
}

}  // namespace kinnet
