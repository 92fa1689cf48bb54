#include "kinnet/clip_io.hpp"

#include "kinnet/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace kinnet {

using nlohmann::json;

namespace {

constexpr const char* kSkeletonFormat = "kinnet.skeleton";
constexpr const char* kClipFormat = "kinnet.clip";
constexpr const char* kPositionsFormat = "kinnet.positions";

json parse_document(const std::string& text, const char* format) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw FormatError("document root must be an object");
  }
  if (!doc.contains("format") || doc["format"] != format) {
    throw FormatError(std::string("expected format '") + format + "'");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw FormatError("missing version field");
  }
  if (doc["version"].get<int>() != kClipFormatVersion) {
    throw FormatError("unsupported version " + doc["version"].dump() + " (expected " +
                      std::to_string(kClipFormatVersion) + ")");
  }
  return doc;
}

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError(std::string("missing field '") + key + "'");
  }
  return *it;
}

double number(const json& v, const char* what) {
  if (!v.is_number()) {
    throw FormatError(std::string(what) + " must be a number");
  }
  return v.get<double>();
}

Vec3 vec3(const json& v, const char* what) {
  if (!v.is_array() || v.size() != 3) {
    throw FormatError(std::string(what) + " must be a 3-element array");
  }
  return {number(v[0], what), number(v[1], what), number(v[2], what)};
}

std::vector<double> numbers(const json& v, std::size_t expected, const char* what) {
  if (!v.is_array() || v.size() != expected) {
    throw FormatError(std::string(what) + " must be an array of " + std::to_string(expected) +
                      " numbers");
  }
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    out[i] = number(v[i], what);
  }
  return out;
}

json skeleton_to_json(const Skeleton& skeleton) {
  json joints = json::array();
  for (const Joint& j : skeleton.joints()) {
    joints.push_back({{"name", j.name},
                      {"parent", j.parent},
                      {"offset", {j.offset.x(), j.offset.y(), j.offset.z()}}});
  }
  return {{"name", skeleton.name()}, {"joints", joints}};
}

Skeleton skeleton_from_json(const json& obj) {
  if (!obj.is_object()) {
    throw FormatError("skeleton must be an object");
  }
  const json& list = field(obj, "joints");
  if (!list.is_array()) {
    throw FormatError("'joints' must be an array");
  }
  std::vector<Joint> joints;
  for (const json& j : list) {
    Joint joint;
    joint.name = field(j, "name").get<std::string>();
    joint.parent = field(j, "parent").get<int>();
    joint.offset = vec3(field(j, "offset"), "joint offset");
    joints.push_back(std::move(joint));
  }
  try {
    return Skeleton(field(obj, "name").get<std::string>(), std::move(joints));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("invalid skeleton: ") + e.what());
  }
}

}  // namespace

std::string write_skeleton_json(const Skeleton& skeleton) {
  json doc = skeleton_to_json(skeleton);
  doc["format"] = kSkeletonFormat;
  doc["version"] = kClipFormatVersion;
  return doc.dump(1);
}

Skeleton parse_skeleton_json(const std::string& text) {
  return skeleton_from_json(parse_document(text, kSkeletonFormat));
}

std::string write_clip_json(const MotionClip& clip) {
  clip.validate();
  json doc;
  doc["format"] = kClipFormat;
  doc["version"] = kClipFormatVersion;
  doc["skeleton"] = skeleton_to_json(clip.skeleton);
  doc["fps"] = clip.fps;
  doc["start_position"] = {clip.start_position.x(), clip.start_position.y(),
                           clip.start_position.z()};
  doc["start_yaw"] = clip.start_yaw;
  json local = json::array();
  for (const Pose& pose : clip.local) {
    json row = json::array();
    for (const Vec3& p : pose) {
      row.push_back(p.x());
      row.push_back(p.y());
      row.push_back(p.z());
    }
    local.push_back(std::move(row));
  }
  doc["local"] = std::move(local);
  json global = json::array();
  for (const GlobalMotion& g : clip.global) {
    global.push_back({g.velocity.x(), g.velocity.y(), g.velocity.z(), g.dyaw});
  }
  doc["global"] = std::move(global);
  if (clip.has_rotations()) {
    json rotations = json::array();
    for (const Rotations& frame : clip.rotations) {
      json row = json::array();
      for (const Quaternion& q : frame) {
        row.push_back(q.r);
        row.push_back(q.i);
        row.push_back(q.j);
        row.push_back(q.k);
      }
      rotations.push_back(std::move(row));
    }
    doc["rotations"] = std::move(rotations);
  }
  const ClipInfo& info = clip.info;
  doc["info"] = {{"motion", info.motion},
                 {"character", info.character},
                 {"source_character", info.source_character},
                 {"split", info.split},
                 {"scenario", info.scenario}};
  return doc.dump();
}

MotionClip parse_clip_json(const std::string& text) {
  const json doc = parse_document(text, kClipFormat);
  MotionClip clip;
  clip.skeleton = skeleton_from_json(field(doc, "skeleton"));
  clip.fps = number(field(doc, "fps"), "fps");
  clip.start_position = vec3(field(doc, "start_position"), "start_position");
  clip.start_yaw = number(field(doc, "start_yaw"), "start_yaw");

  const std::size_t n = clip.skeleton.size();
  const json& local = field(doc, "local");
  const json& global = field(doc, "global");
  if (!local.is_array() || !global.is_array()) {
    throw FormatError("'local' and 'global' must be arrays");
  }
  for (const json& row : local) {
    const std::vector<double> v = numbers(row, 3 * n, "local frame");
    Pose pose(n);
    for (std::size_t j = 0; j < n; ++j) {
      pose[j] = {v[3 * j], v[3 * j + 1], v[3 * j + 2]};
    }
    clip.local.push_back(std::move(pose));
  }
  for (const json& row : global) {
    const std::vector<double> v = numbers(row, 4, "global frame");
    clip.global.push_back({Vec3(v[0], v[1], v[2]), v[3]});
  }
  if (auto it = doc.find("rotations"); it != doc.end()) {
    for (const json& row : *it) {
      const std::vector<double> v = numbers(row, 4 * n, "rotation frame");
      Rotations frame(n);
      for (std::size_t j = 0; j < n; ++j) {
        frame[j] = {v[4 * j], v[4 * j + 1], v[4 * j + 2], v[4 * j + 3]};
      }
      clip.rotations.push_back(std::move(frame));
    }
  }
  if (auto it = doc.find("info"); it != doc.end() && it->is_object()) {
    clip.info.motion = it->value("motion", "");
    clip.info.character = it->value("character", "");
    clip.info.source_character = it->value("source_character", "");
    clip.info.split = it->value("split", "");
    clip.info.scenario = it->value("scenario", "");
  }
  try {
    clip.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid clip: ") + e.what());
  }
  return clip;
}

PositionTrack parse_positions_json(const std::string& text) {
  const json doc = parse_document(text, kPositionsFormat);
  PositionTrack track;
  track.fps = number(field(doc, "fps"), "fps");
  track.joints = field(doc, "joints").get<std::vector<std::string>>();
  const std::size_t n = track.joints.size();
  for (const json& row : field(doc, "frames")) {
    const std::vector<double> v = numbers(row, 3 * n, "position frame");
    Pose pose(n);
    for (std::size_t j = 0; j < n; ++j) {
      pose[j] = {v[3 * j], v[3 * j + 1], v[3 * j + 2]};
      if (!pose[j].allFinite()) {
        throw FormatError("non-finite position");
      }
    }
    track.frames.push_back(std::move(pose));
  }
  if (track.frames.size() < 2) {
    throw FormatError("position track needs at least 2 frames");
  }
  return track;
}

std::string write_positions_json(const PositionTrack& track) {
  json frames = json::array();
  for (const Pose& pose : track.frames) {
    json row = json::array();
    for (const Vec3& p : pose) {
      row.push_back(p.x());
      row.push_back(p.y());
      row.push_back(p.z());
    }
    frames.push_back(std::move(row));
  }
  json doc = {{"format", kPositionsFormat},
              {"version", kClipFormatVersion},
              {"fps", track.fps},
              {"joints", track.joints},
              {"frames", std::move(frames)}};
  return doc.dump();
}

JointMapping parse_joint_mapping_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed joint mapping: ") + e.what());
  }
  const json& map = doc.contains("mapping") ? doc["mapping"] : doc;
  if (!map.is_object()) {
    throw FormatError("joint mapping must be an object of canonical -> source names");
  }
  JointMapping out;
  for (auto it = map.begin(); it != map.end(); ++it) {
    if (!it.value().is_string()) {
      throw FormatError("joint mapping values must be strings");
    }
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

std::pair<Skeleton, std::vector<Pose>> map_to_canonical(const PositionTrack& track,
                                                        const JointMapping& mapping,
                                                        const std::string& skeleton_name) {
  std::vector<std::size_t> source(kCanonicalJointCount);
  for (std::size_t c = 0; c < kCanonicalJointCount; ++c) {
    const std::string canonical(kCanonicalJointNames[c]);
    auto m = mapping.find(canonical);
    const std::string wanted = m != mapping.end() ? m->second : canonical;
    auto it = std::find(track.joints.begin(), track.joints.end(), wanted);
    if (it == track.joints.end()) {
      throw FormatError("no source joint '" + wanted + "' for canonical joint '" + canonical +
                        "'");
    }
    source[c] = static_cast<std::size_t>(it - track.joints.begin());
  }
  std::vector<Pose> frames;
  frames.reserve(track.frames.size());
  for (const Pose& pose : track.frames) {
    Pose out(kCanonicalJointCount);
    for (std::size_t c = 0; c < kCanonicalJointCount; ++c) {
      out[c] = pose[source[c]];
    }
    frames.push_back(std::move(out));
  }
  std::vector<std::string> names(kCanonicalJointNames.begin(), kCanonicalJointNames.end());
  Skeleton skeleton = Skeleton::from_tpose(skeleton_name, names, kCanonicalParents, frames[0]);
  return {std::move(skeleton), std::move(frames)};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << text;
}

}  // namespace kinnet
