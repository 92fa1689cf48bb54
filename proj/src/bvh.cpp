#include "kinnet/bvh.hpp"

#include "kinnet/errors.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace kinnet {

namespace {

enum class Channel { kXpos, kYpos, kZpos, kXrot, kYrot, kZrot };

struct BvhJoint {
  std::string name;
  int parent = -1;
  Vec3 offset = Vec3::Zero();
  std::vector<Channel> channels;
  std::size_t first_channel = 0;
};

struct Token {
  std::string_view text;
  int line = 0;
};

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view text) : text_(text) {}

  bool done() {
    skip_space();
    return pos_ >= text_.size();
  }

  Token next() {
    skip_space();
    if (pos_ >= text_.size()) {
      throw ParseError("unexpected end of file", line_);
    }
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return {text_.substr(begin, pos_ - begin), line_};
  }

  Token peek() {
    const std::size_t saved_pos = pos_;
    const int saved_line = line_;
    Token t = next();
    pos_ = saved_pos;
    line_ = saved_line;
    return t;
  }

  void expect(std::string_view word) {
    const Token t = next();
    if (t.text != word) {
      throw ParseError("expected '" + std::string(word) + "', found '" + std::string(t.text) + "'",
                       t.line);
    }
  }

  double number() {
    const Token t = next();
    double value = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (first != last && *first == '+') {
      ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw ParseError("expected a number, found '" + std::string(t.text) + "'", t.line);
    }
    if (!std::isfinite(value)) {
      throw ParseError("non-finite value '" + std::string(t.text) + "'", t.line);
    }
    return value;
  }

  long integer() {
    const Token t = next();
    long value = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      throw ParseError("expected an integer, found '" + std::string(t.text) + "'", t.line);
    }
    return value;
  }

  int line() const { return line_; }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') {
        ++line_;
      }
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

Channel parse_channel(const Token& t) {
  static constexpr std::array<std::pair<std::string_view, Channel>, 6> kNames = {{
      {"Xposition", Channel::kXpos},
      {"Yposition", Channel::kYpos},
      {"Zposition", Channel::kZpos},
      {"Xrotation", Channel::kXrot},
      {"Yrotation", Channel::kYrot},
      {"Zrotation", Channel::kZrot},
  }};
  for (const auto& [name, channel] : kNames) {
    if (t.text == name) {
      return channel;
    }
  }
  throw ParseError("unknown channel '" + std::string(t.text) + "'", t.line);
}

class HierarchyParser {
 public:
  explicit HierarchyParser(Tokenizer& tok) : tok_(tok) {}

  std::vector<BvhJoint> parse() {
    tok_.expect("HIERARCHY");
    tok_.expect("ROOT");
    parse_joint(-1);
    return std::move(joints_);
  }

  std::size_t channel_count() const { return channels_; }

 private:
  void parse_joint(int parent) {
    const Token name = tok_.next();
    BvhJoint joint;
    joint.name = std::string(name.text);
    joint.parent = parent;
    tok_.expect("{");
    tok_.expect("OFFSET");
    joint.offset = {tok_.number(), tok_.number(), tok_.number()};

    const Token maybe = tok_.peek();
    if (maybe.text == "CHANNELS") {
      tok_.next();
      const long count = tok_.integer();
      if (count != 3 && count != 6) {
        throw ParseError("joint '" + joint.name + "' has " + std::to_string(count) +
                             " channels (expected 3 or 6)",
                         maybe.line);
      }
      int rotations = 0;
      for (long c = 0; c < count; ++c) {
        const Channel ch = parse_channel(tok_.next());
        rotations += ch >= Channel::kXrot ? 1 : 0;
        joint.channels.push_back(ch);
      }
      if (rotations != 3) {
        throw ParseError("joint '" + joint.name + "' needs exactly 3 rotation channels",
                         maybe.line);
      }
    }
    joint.first_channel = channels_;
    channels_ += joint.channels.size();
    const int index = static_cast<int>(joints_.size());
    joints_.push_back(std::move(joint));

    while (true) {
      const Token t = tok_.next();
      if (t.text == "}") {
        return;
      }
      if (t.text == "JOINT") {
        parse_joint(index);
      } else if (t.text == "End") {
        tok_.expect("Site");
        tok_.expect("{");
        tok_.expect("OFFSET");
        tok_.number();
        tok_.number();
        tok_.number();
        tok_.expect("}");
      } else {
        throw ParseError("unexpected token '" + std::string(t.text) + "' in joint block",
                         t.line);
      }
    }
  }

  Tokenizer& tok_;
  std::vector<BvhJoint> joints_;
  std::size_t channels_ = 0;
};

Mat3 channel_rotation(Channel c, double degrees) {
  switch (c) {
    case Channel::kXrot:
      return axis_angle_matrix(Vec3::UnitX(), degrees);
    case Channel::kYrot:
      return axis_angle_matrix(Vec3::UnitY(), degrees);
    case Channel::kZrot:
      return axis_angle_matrix(Vec3::UnitZ(), degrees);
    default:
      return Mat3::Identity();
  }
}

std::string strip_namespace(std::string_view name) {
  const std::size_t colon = name.rfind(':');
  if (colon != std::string_view::npos) {
    name = name.substr(colon + 1);
  }
  return std::string(name);
}

}  // namespace

BvhMotion parse_bvh(std::string_view text) {
  Tokenizer tok(text);
  HierarchyParser hierarchy(tok);
  std::vector<BvhJoint> joints = hierarchy.parse();
  if (joints.size() < 2) {
    throw ParseError("hierarchy needs at least 2 joints", tok.line());
  }
  const std::size_t channels = hierarchy.channel_count();

  tok.expect("MOTION");
  tok.expect("Frames:");
  const long frames = tok.integer();
  if (frames < 1) {
    throw ParseError("frame count must be positive", tok.line());
  }
  tok.expect("Frame");
  tok.expect("Time:");
  const double frame_time = tok.number();
  if (!(frame_time > 0.0)) {
    throw ParseError("frame time must be positive", tok.line());
  }

  BvhMotion motion;
  motion.fps = 1.0 / frame_time;
  {
    std::vector<Joint> named(joints.size());
    for (std::size_t i = 0; i < joints.size(); ++i) {
      named[i] = {joints[i].name, joints[i].parent, joints[i].offset};
    }
    try {
      motion.skeleton = Skeleton("bvh", std::move(named));
    } catch (const Error& e) {
      throw ParseError(e.what(), 0);
    }
  }

  std::vector<double> row(channels);
  for (long f = 0; f < frames; ++f) {
    const int row_line = tok.done() ? tok.line() : tok.peek().line;
    for (std::size_t c = 0; c < channels; ++c) {
      if (tok.done()) {
        throw ParseError("frame " + std::to_string(f) + " has " + std::to_string(c) +
                             " values, expected " + std::to_string(channels),
                         row_line);
      }
      const Token peeked = tok.peek();
      if (c > 0 && peeked.line != row_line) {
        throw ParseError("frame " + std::to_string(f) + " has " + std::to_string(c) +
                             " values, expected " + std::to_string(channels),
                         row_line);
      }
      row[c] = tok.number();
    }
    if (!tok.done() && tok.peek().line == row_line) {
      throw ParseError("frame " + std::to_string(f) + " has more than " +
                           std::to_string(channels) + " values",
                       row_line);
    }

    Pose positions(joints.size());
    std::vector<Mat3> world(joints.size());
    for (std::size_t j = 0; j < joints.size(); ++j) {
      const BvhJoint& joint = joints[j];
      Vec3 translation = joint.offset;
      Mat3 rotation = Mat3::Identity();
      for (std::size_t c = 0; c < joint.channels.size(); ++c) {
        const double v = row[joint.first_channel + c];
        switch (joint.channels[c]) {
          case Channel::kXpos:
            translation.x() += v;
            break;
          case Channel::kYpos:
            translation.y() += v;
            break;
          case Channel::kZpos:
            translation.z() += v;
            break;
          default:
            rotation = rotation * channel_rotation(joint.channels[c], v);
        }
      }
      if (joint.parent < 0) {
        positions[j] = translation;
        world[j] = rotation;
      } else {
        positions[j] = positions[joint.parent] + world[joint.parent] * translation;
        world[j] = world[joint.parent] * rotation;
      }
    }
    motion.positions.push_back(std::move(positions));
    motion.world.push_back(std::move(world));
  }
  if (!tok.done()) {
    const Token extra = tok.next();
    throw ParseError("trailing data after " + std::to_string(frames) + " frames", extra.line);
  }
  return motion;
}

const std::map<std::string, std::string, std::less<>>& joint_alias_table() {
  static const std::map<std::string, std::string, std::less<>> table = [] {
    std::map<std::string, std::string, std::less<>> t;
    for (std::string_view name : kCanonicalJointNames) {
      t[std::string(name)] = std::string(name);
    }
    const std::pair<const char*, const char*> aliases[] = {
        {"Hips", "Root"},          {"hip", "Root"},
        {"Pelvis", "Root"},        {"abdomen", "Spine"},
        {"chest", "Spine1"},       {"Chest", "Spine1"},
        {"Chest2", "Spine2"},      {"UpperChest", "Spine2"},
        {"neck", "Neck"},          {"head", "Head"},
        {"LeftHip", "LeftUpLeg"},  {"LeftThigh", "LeftUpLeg"},
        {"lThigh", "LeftUpLeg"},   {"LeftKnee", "LeftLeg"},
        {"LeftShin", "LeftLeg"},   {"lShin", "LeftLeg"},
        {"LeftAnkle", "LeftFoot"}, {"lFoot", "LeftFoot"},
        {"LeftToe", "LeftToeBase"}, {"LeftCollar", "LeftShoulder"},
        {"lCollar", "LeftShoulder"}, {"LeftUpArm", "LeftArm"},
        {"lShldr", "LeftArm"},     {"LeftLowArm", "LeftForeArm"},
        {"LeftElbow", "LeftForeArm"}, {"lForeArm", "LeftForeArm"},
        {"LeftWrist", "LeftHand"}, {"lHand", "LeftHand"},
        {"RightHip", "RightUpLeg"}, {"RightThigh", "RightUpLeg"},
        {"rThigh", "RightUpLeg"},  {"RightKnee", "RightLeg"},
        {"RightShin", "RightLeg"}, {"rShin", "RightLeg"},
        {"RightAnkle", "RightFoot"}, {"rFoot", "RightFoot"},
        {"RightToe", "RightToeBase"}, {"RightCollar", "RightShoulder"},
        {"rCollar", "RightShoulder"}, {"RightUpArm", "RightArm"},
        {"rShldr", "RightArm"},    {"RightLowArm", "RightForeArm"},
        {"RightElbow", "RightForeArm"}, {"rForeArm", "RightForeArm"},
        {"RightWrist", "RightHand"}, {"rHand", "RightHand"},
    };
    for (const auto& [alias, canonical] : aliases) {
      t[alias] = canonical;
    }
    return t;
  }();
  return table;
}

std::string canonical_joint_name(std::string_view bvh_name) {
  const std::string bare = strip_namespace(bvh_name);
  const auto& table = joint_alias_table();
  auto it = table.find(bare);
  return it == table.end() ? std::string() : it->second;
}

CanonicalMotion to_canonical(const BvhMotion& motion, const std::string& skeleton_name) {
  const Skeleton& full = motion.skeleton;
  std::vector<int> source(kCanonicalJointCount, -1);
  for (std::size_t j = 0; j < full.size(); ++j) {
    const std::string canonical = canonical_joint_name(full.joint(j).name);
    if (canonical.empty()) {
      continue;
    }
    for (std::size_t c = 0; c < kCanonicalJointCount; ++c) {
      if (kCanonicalJointNames[c] == canonical && source[c] < 0) {
        source[c] = static_cast<int>(j);
      }
    }
  }
  for (std::size_t c = 0; c < kCanonicalJointCount; ++c) {
    if (source[c] < 0) {
      throw Error("BVH has no joint for canonical '" + std::string(kCanonicalJointNames[c]) + "'");
    }
  }

  // Zero-rotation pose of the file hierarchy gives the canonical T-pose.
  std::vector<Vec3> tpose_full(full.size());
  for (std::size_t j = 0; j < full.size(); ++j) {
    const int p = full.parent(j);
    tpose_full[j] = p < 0 ? full.joint(j).offset : tpose_full[p] + full.joint(j).offset;
  }
  std::vector<std::string> names(kCanonicalJointNames.begin(), kCanonicalJointNames.end());
  std::vector<Vec3> tpose(kCanonicalJointCount);
  for (std::size_t c = 0; c < kCanonicalJointCount; ++c) {
    tpose[c] = tpose_full[source[c]];
  }

  CanonicalMotion out;
  out.skeleton = Skeleton::from_tpose(skeleton_name, names, kCanonicalParents, tpose);
  out.fps = motion.fps;
  for (std::size_t f = 0; f < motion.positions.size(); ++f) {
    Pose pose(kCanonicalJointCount);
    // Our joint n rotates the bone that ends at n, i.e. the file's rotation
    // of n's direct parent in the hierarchy.
    std::vector<Mat3> world(kCanonicalJointCount);
    for (std::size_t c = 0; c < kCanonicalJointCount; ++c) {
      pose[c] = motion.positions[f][source[c]];
      const int file_parent = full.parent(source[c]);
      world[c] = motion.world[f][file_parent < 0 ? source[c] : file_parent];
    }
    Rotations rotations(kCanonicalJointCount);
    for (std::size_t c = 0; c < kCanonicalJointCount; ++c) {
      const int p = kCanonicalParents[c];
      const Mat3 local = p < 0 ? world[c] : Mat3(world[p].transpose() * world[c]);
      rotations[c] = quat_from_rotmat(local);
    }
    out.positions.push_back(std::move(pose));
    out.rotations.push_back(std::move(rotations));
  }
  return out;
}

}  // namespace kinnet
