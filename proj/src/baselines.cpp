#include "kinnet/baselines.hpp"

#include "kinnet/errors.hpp"
#include "kinnet/model.hpp"

namespace kinnet {

MotionClip copy_retarget(const MotionClip& input, const Skeleton& target, Composition mode) {
  input.validate();
  if (!input.has_rotations()) {
    throw Error("copy baseline needs per-joint rotations; position-only input is not supported");
  }
  if (!input.skeleton.same_topology(target)) {
    throw Error("copy baseline needs matching joint sets");
  }
  const double ratio = target.height() / input.skeleton.height();
  MotionClip out;
  out.skeleton = target;
  out.fps = input.fps;
  out.start_position = transfer_start_position(input.start_position, input.skeleton, target);
  out.start_yaw = input.start_yaw;
  out.info = input.info;
  out.info.source_character = input.skeleton.name();
  out.info.character = target.name();
  out.rotations = input.rotations;
  out.local.reserve(input.length());
  for (const Rotations& q : input.rotations) {
    out.local.push_back(fk_forward(q, target, mode));
  }
  out.global.reserve(input.length());
  for (const GlobalMotion& g : input.global) {
    out.global.push_back({g.velocity * ratio, g.dyaw});
  }
  return out;
}

}  // namespace kinnet
