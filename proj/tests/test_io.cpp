#include "kinnet/bvh.hpp"
#include "kinnet/clip_io.hpp"
#include "kinnet/errors.hpp"
#include "kinnet/fk.hpp"
#include "kinnet/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <json.hpp>
#include <sstream>

using namespace kinnet;

namespace {

MotionClip random_clip(Rng& rng) {
  const Skeleton s = make_character("char" + std::to_string(rng() % 100), random_bone_scales(rng));
  const auto kind = static_cast<MotionKind>(uniform_index(rng, 4));
  MotionClip c = perform(generate_performance(random_motion_params(rng, kind), 20), s);
  c.info.motion = "m";
  c.info.split = "test";
  return c;
}

// Canonical hierarchy written as BVH with ZXY rotation channels; the root also
// carries position channels. Each row holds random angles.
std::string canonical_bvh(Rng& rng, const Skeleton& s, int frames) {
  std::ostringstream out;
  out.precision(17);
  std::vector<std::vector<int>> children(s.size());
  for (std::size_t n = 1; n < s.size(); ++n) {
    children[s.parent(n)].push_back(static_cast<int>(n));
  }
  std::vector<std::string> names(s.size());
  for (std::size_t n = 0; n < s.size(); ++n) {
    names[n] = "mixamorig:" + (n == 0 ? std::string("Hips") : s.joint(n).name);
  }
  std::function<void(int, int)> emit = [&](int n, int depth) {
    const std::string pad(depth * 2, ' ');
    const Vec3 off = n == 0 ? s.root_position() : s.bone(n);
    out << pad << (n == 0 ? "ROOT " : "JOINT ") << names[n] << "\n" << pad << "{\n";
    out << pad << "  OFFSET " << off.x() << " " << off.y() << " " << off.z() << "\n";
    if (n == 0) {
      out << pad << "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n";
    } else {
      out << pad << "  CHANNELS 3 Zrotation Xrotation Yrotation\n";
    }
    for (int c : children[n]) {
      emit(c, depth + 1);
    }
    if (children[n].empty()) {
      out << pad << "  End Site\n" << pad << "  {\n" << pad << "    OFFSET 0 1 0\n" << pad
          << "  }\n";
    }
    out << pad << "}\n";
  };
  out << "HIERARCHY\n";
  emit(0, 0);
  out << "MOTION\nFrames: " << frames << "\nFrame Time: 0.0333333\n";
  for (int f = 0; f < frames; ++f) {
    out << uniform(rng, -50, 50) << " " << uniform(rng, 80, 120) << " " << uniform(rng, -50, 50);
    for (std::size_t n = 0; n < s.size(); ++n) {
      for (int c = 0; c < 3; ++c) {
        out << " " << uniform(rng, -60, 60);
      }
    }
    out << "\n";
  }
  return out.str();
}

const char* kThreeJoint = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT Spine
  {
    OFFSET 0 1 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 1 0
    }
  }
}
MOTION
Frames: 1
Frame Time: 0.04
0 0 0 90 0 0 0 0 0
)";

}  // namespace

TEST_CASE("clip json round trip") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const MotionClip c = random_clip(rng);
    const MotionClip back = parse_clip_json(write_clip_json(c));
    REQUIRE(back.length() == c.length());
    CHECK(back.skeleton.name() == c.skeleton.name());
    CHECK(back.fps == c.fps);
    CHECK(back.start_yaw == c.start_yaw);
    CHECK(back.info.motion == "m");
    for (std::size_t n = 0; n < c.skeleton.size(); ++n) {
      CHECK(back.skeleton.joint(n).offset == c.skeleton.joint(n).offset);
    }
    for (std::size_t t = 0; t < c.length(); ++t) {
      CHECK(back.global[t].velocity == c.global[t].velocity);
      CHECK(back.global[t].dyaw == c.global[t].dyaw);
      for (std::size_t n = 0; n < c.skeleton.size(); ++n) {
        CHECK((back.local[t][n] - c.local[t][n]).norm() <= 1e-9);
        CHECK((back.rotations[t][n].vec() - c.rotations[t][n].vec()).norm() <= 1e-9);
      }
    }
  }
}

TEST_CASE("clip json rejects bad documents") {
  Rng rng(103);
  const MotionClip c = random_clip(rng);
  auto doc = nlohmann::json::parse(write_clip_json(c));
  SUBCASE("unknown version") {
    doc["version"] = 99;
    CHECK_THROWS_AS(parse_clip_json(doc.dump()), FormatError);
  }
  SUBCASE("wrong format") {
    doc["format"] = "something.else";
    CHECK_THROWS_AS(parse_clip_json(doc.dump()), FormatError);
  }
  SUBCASE("empty clip") {
    doc["local"] = nlohmann::json::array();
    doc["global"] = nlohmann::json::array();
    doc.erase("rotations");
    CHECK_THROWS_AS(parse_clip_json(doc.dump()), Error);
  }
  SUBCASE("missing field") {
    doc.erase("global");
    CHECK_THROWS_AS(parse_clip_json(doc.dump()), Error);
  }
  SUBCASE("not json") {
    CHECK_THROWS_AS(parse_clip_json("{ nope"), Error);
  }
}

TEST_CASE("skeleton json round trip") {
  Rng rng(107);
  const Skeleton s = make_character("x", random_bone_scales(rng));
  const Skeleton back = parse_skeleton_json(write_skeleton_json(s));
  CHECK(back.same_topology(s));
  for (std::size_t n = 0; n < s.size(); ++n) {
    CHECK(back.joint(n).offset == s.joint(n).offset);
  }
}

TEST_CASE("bvh with zero rotations places joints at their offsets") {
  const std::string text = R"(HIERARCHY
ROOT Hips
{
  OFFSET 1 2 3
  CHANNELS 6 Xposition Yposition Zposition Xrotation Yrotation Zrotation
  JOINT Spine
  {
    OFFSET 0 10 0
    CHANNELS 3 Xrotation Yrotation Zrotation
    End Site
    {
      OFFSET 0 5 0
    }
  }
}
MOTION
Frames: 1
Frame Time: 0.033333
0 0 0 0 0 0 0 0 0
)";
  const BvhMotion m = parse_bvh(text);
  REQUIRE(m.positions.size() == 1);
  CHECK(m.skeleton.size() == 2);
  CHECK(m.fps == doctest::Approx(30.0).epsilon(1e-4));
  CHECK((m.positions[0][0] - Vec3(1, 2, 3)).norm() < 1e-12);
  CHECK((m.positions[0][1] - Vec3(1, 12, 3)).norm() < 1e-12);
}

TEST_CASE("bvh root rotation about z") {
  const BvhMotion m = parse_bvh(kThreeJoint);
  // Active 90 degrees about z turns the +y offset to -x.
  const Vec3 expected = axis_angle_matrix(Vec3::UnitZ(), 90.0) * Vec3(0, 1, 0);
  CHECK((m.positions[0][1] - expected).norm() < 1e-12);
  CHECK((m.positions[0][1] - Vec3(-1, 0, 0)).norm() < 1e-12);
  CHECK(m.fps == doctest::Approx(25.0));
}

TEST_CASE("bvh errors carry line numbers") {
  SUBCASE("bad channel count") {
    std::string t = kThreeJoint;
    t.replace(t.find("CHANNELS 3"), 10, "CHANNELS 4");
    try {
      parse_bvh(t);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 9);
    }
  }
  SUBCASE("short frame row") {
    std::string t = kThreeJoint;
    t.replace(t.rfind("0 0 0 90"), 8, "0 0 90");
    CHECK_THROWS_AS(parse_bvh(t), ParseError);
  }
  SUBCASE("non-finite value") {
    std::string t = kThreeJoint;
    t.replace(t.rfind("90"), 2, "nan");
    CHECK_THROWS_AS(parse_bvh(t), ParseError);
  }
  SUBCASE("missing motion section") {
    std::string t = kThreeJoint;
    t.resize(t.find("MOTION"));
    CHECK_THROWS_AS(parse_bvh(t), ParseError);
  }
}

TEST_CASE("bvh parsing never fails with anything but typed errors") {
  Rng rng(109);
  const std::string base = kThreeJoint;
  const std::string alphabet = "0123456789.-+ \n{}ABCXYZ";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string t = base;
    const int edits = 1 + static_cast<int>(uniform_index(rng, 4));
    for (int e = 0; e < edits; ++e) {
      const std::size_t pos = uniform_index(rng, t.size());
      switch (uniform_index(rng, 3)) {
        case 0:
          t[pos] = alphabet[uniform_index(rng, alphabet.size())];
          break;
        case 1:
          t.erase(pos, 1 + uniform_index(rng, 8));
          break;
        default:
          t.insert(pos, 1, alphabet[uniform_index(rng, alphabet.size())]);
      }
    }
    try {
      parse_bvh(t);
    } catch (const Error&) {
    }
  }
}

TEST_CASE("bvh to canonical motion") {
  Rng rng(113);
  const Skeleton s = make_character("x", random_bone_scales(rng));
  const BvhMotion m = parse_bvh(canonical_bvh(rng, s, 6));
  const CanonicalMotion c = to_canonical(m, "bvh");
  CHECK(c.skeleton.size() == kCanonicalJointCount);
  CHECK(c.skeleton.joint(0).name == "Root");
  for (std::size_t f = 0; f < c.positions.size(); ++f) {
    const auto p = fk_forward(c.rotations[f], c.skeleton);
    for (std::size_t n = 0; n < kCanonicalJointCount; ++n) {
      CHECK((p[n] + c.positions[f][0] - c.positions[f][n]).norm() < 1e-9);
    }
  }
  // Through the clip format and back.
  const MotionClip clip = preprocess(c.positions, c.skeleton, c.fps, &c.rotations);
  const MotionClip back = parse_clip_json(write_clip_json(clip));
  const auto world = world_positions(back);
  for (std::size_t f = 0; f < world.size(); ++f) {
    for (std::size_t n = 0; n < kCanonicalJointCount; ++n) {
      CHECK((world[f][n] - c.positions[f][n]).norm() < 1e-6);
    }
  }
}

TEST_CASE("joint names") {
  CHECK(canonical_joint_name("mixamorig:LeftForeArm") == "LeftForeArm");
  CHECK(canonical_joint_name("Hips") == "Root");
  CHECK(canonical_joint_name("LeftFingerBase").empty());
}

TEST_CASE("position tracks map onto the canonical set with duplicated joints") {
  Rng rng(127);
  const Skeleton s = template_skeleton();
  // A 17-joint estimator layout: no toes, one spine joint and no shoulders.
  const std::vector<std::string> source = {
      "Hip", "Spine", "Thorax", "Neck", "Head", "LHip", "LKnee", "LAnkle", "RHip",
      "RKnee", "RAnkle", "LShoulder", "LElbow", "LWrist", "RShoulder", "RElbow", "RWrist"};
  const std::vector<std::string> canon = {
      "Root", "Spine", "Spine2", "Neck", "Head", "LeftUpLeg", "LeftLeg", "LeftFoot", "RightUpLeg",
      "RightLeg", "RightFoot", "LeftArm", "LeftForeArm", "LeftHand", "RightArm", "RightForeArm",
      "RightHand"};
  PositionTrack track;
  track.fps = 25;
  track.joints = source;
  for (int f = 0; f < 3; ++f) {
    Pose pose;
    for (const auto& name : canon) {
      pose.push_back(s.local_tpose()[s.index_of(name)] + Vec3(0, 100, f));
    }
    track.frames.push_back(pose);
  }
  JointMapping mapping;
  for (std::size_t i = 0; i < source.size(); ++i) {
    mapping[canon[i]] = source[i];
  }
  mapping["Spine1"] = "Spine";
  mapping["LeftToeBase"] = "LAnkle";
  mapping["RightToeBase"] = "RAnkle";
  mapping["LeftShoulder"] = "Thorax";
  mapping["RightShoulder"] = "Thorax";
  const auto back = parse_positions_json(write_positions_json(track));
  const auto [skel, poses] = map_to_canonical(back, mapping, "estimated");
  CHECK(skel.size() == kCanonicalJointCount);
  CHECK(poses.size() == 3);
  CHECK(skel.bone(skel.index_of("LeftToeBase")).norm() == 0.0);
  CHECK((poses[2][skel.index_of("RightHand")] - track.frames[2][16]).norm() < 1e-12);

  JointMapping incomplete = mapping;
  incomplete.erase("LeftLeg");
  CHECK_THROWS_AS(map_to_canonical(back, incomplete, "x"), Error);

  const auto parsed = parse_joint_mapping_json(R"({"mapping": {"Root": "Hip"}})");
  CHECK(parsed.at("Root") == "Hip");
  (void)rng;
}
