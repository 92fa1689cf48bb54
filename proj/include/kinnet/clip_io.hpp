#pragma once

#include "kinnet/motion.hpp"
#include "kinnet/skeleton.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kinnet {

inline constexpr int kClipFormatVersion = 1;

// Native JSON documents. Numbers are written with 17 significant digits so a
// write/read cycle is lossless.
std::string write_skeleton_json(const Skeleton& skeleton);
Skeleton parse_skeleton_json(const std::string& text);

std::string write_clip_json(const MotionClip& clip);
MotionClip parse_clip_json(const std::string& text);

// Position-only input: joint names plus absolute positions per frame,
// e.g. the output of an external pose estimator.
struct PositionTrack {
  double fps = 30.0;
  std::vector<std::string> joints;
  std::vector<Pose> frames;
};
PositionTrack parse_positions_json(const std::string& text);
std::string write_positions_json(const PositionTrack& track);

// Maps canonical joint name -> source joint name. Several canonical joints may
// read the same source joint (this creates zero-length bones).
using JointMapping = std::map<std::string, std::string>;
JointMapping parse_joint_mapping_json(const std::string& text);

// Builds the canonical 22-joint skeleton and absolute positions from a
// position track. The skeleton's offsets are taken from the first frame.
std::pair<Skeleton, std::vector<Pose>> map_to_canonical(const PositionTrack& track,
                                                        const JointMapping& mapping,
                                                        const std::string& skeleton_name);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace kinnet
