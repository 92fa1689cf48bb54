#pragma once

#include "kinnet/fk.hpp"
#include "kinnet/motion.hpp"

namespace kinnet {

// Plays the input's per-joint rotations on `target` and reuses its root
// motion. Velocities are scaled by the target/source height ratio so a
// rotation-copied performance lands on the same trajectory; the yaw rate is
// copied unchanged. Requires a rotation-bearing input (BVH or synthetic);
// throws Error otherwise.
MotionClip copy_retarget(const MotionClip& input, const Skeleton& target,
                         Composition mode = Composition::kHierarchical);

}  // namespace kinnet
