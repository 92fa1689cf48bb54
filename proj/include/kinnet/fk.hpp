#pragma once

#include "kinnet/quat.hpp"
#include "kinnet/skeleton.hpp"

#include <span>
#include <vector>

namespace kinnet {

// How per-joint rotations combine along the tree.
//  kHierarchical: world(n) = world(parent) * R(n); each quaternion is relative
//                 to its parent frame and the root quaternion turns the whole pose.
//  kWorld:        world(n) = R(n); each bone is rotated independently.
enum class Composition { kHierarchical, kWorld };

// Joint positions, root at the origin: p(n) = p(parent) + world(n) * bone(n).
// Throws Error("joint/rotation arity mismatch") when quats.size() != N.
std::vector<Vec3> fk_forward(std::span<const Quaternion> quats, const Skeleton& skeleton,
                             Composition mode = Composition::kHierarchical);

// dL/dq for every joint given dL/dp.
std::vector<Quaternion> fk_backward(std::span<const Quaternion> quats, const Skeleton& skeleton,
                                    std::span<const Vec3> upstream,
                                    Composition mode = Composition::kHierarchical);

// Flat-array forms used by the autodiff layer: quats is 4N (r,i,j,k per joint),
// positions and upstream are 3N. fk_backward_flat accumulates into grad.
void fk_forward_flat(const double* quats, const Skeleton& skeleton, Composition mode,
                     double* positions);
void fk_backward_flat(const double* quats, const Skeleton& skeleton, Composition mode,
                      const double* upstream, double* grad);

}  // namespace kinnet
