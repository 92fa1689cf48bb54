#pragma once

#include "kinnet/motion.hpp"
#include "kinnet/skeleton.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kinnet {

// A parsed BVH file evaluated with its own forward kinematics.
struct BvhMotion {
  // Every named joint of the hierarchy (End Sites are skipped); offsets in file units.
  Skeleton skeleton;
  double fps = 30.0;
  // Absolute joint positions per frame.
  std::vector<Pose> positions;
  // World rotation of each joint per frame (active rotation matrices).
  std::vector<std::vector<Mat3>> world;
};

// Parses the HIERARCHY/MOTION subset: ROOT/JOINT/End Site blocks, OFFSET,
// CHANNELS with 3 or 6 entries in any Euler order, and the frame table.
// Throws ParseError carrying the 1-based line number.
BvhMotion parse_bvh(std::string_view text);

// Canonical name for a BVH joint name, or empty when it is not one of the 22.
// Strips namespace prefixes such as "mixamorig:" and applies the alias table.
std::string canonical_joint_name(std::string_view bvh_name);

// The alias table (alias -> canonical name) consulted by canonical_joint_name.
const std::map<std::string, std::string, std::less<>>& joint_alias_table();

// Reduces a BVH motion to the canonical joint set. Unmapped joints are dropped;
// a missing canonical joint is an error. The result carries both positions
// and per-joint FK rotations in this library's convention.
struct CanonicalMotion {
  Skeleton skeleton;
  double fps = 30.0;
  std::vector<Pose> positions;
  std::vector<Rotations> rotations;
};
CanonicalMotion to_canonical(const BvhMotion& motion, const std::string& skeleton_name);

}  // namespace kinnet
