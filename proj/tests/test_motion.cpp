#include "kinnet/errors.hpp"
#include "kinnet/fk.hpp"
#include "kinnet/motion.hpp"
#include "kinnet/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace kinnet;

namespace {

std::vector<Pose> static_tpose(const Skeleton& s, std::size_t frames, const Vec3& shift,
                               const Vec3& step, double yaw_step) {
  std::vector<Pose> out(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const Mat3 yaw = yaw_matrix(yaw_step * static_cast<double>(t));
    out[t].resize(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) {
      out[t][n] = yaw * s.local_tpose()[n] + s.root_position() + shift +
                  step * static_cast<double>(t);
    }
  }
  return out;
}

double max_error(const std::vector<Pose>& a, const std::vector<Pose>& b) {
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t n = 0; n < a[t].size(); ++n) {
      worst = std::max(worst, (a[t][n] - b[t][n]).norm());
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("apply_global integrates root motion") {
  const Skeleton s = template_skeleton();
  std::vector<Pose> local(5, s.local_tpose());
  SUBCASE("zero motion leaves local poses in place") {
    const auto world = apply_global(local, std::vector<GlobalMotion>(5));
    CHECK(max_error(world, local) == 0.0);
  }
  SUBCASE("constant velocity") {
    std::vector<GlobalMotion> g(5);
    for (auto& m : g) {
      m.velocity = Vec3(1, 0, 0);
    }
    const auto world = apply_global(local, g);
    for (std::size_t t = 0; t < 5; ++t) {
      CHECK(world[t][0].x() == doctest::Approx(static_cast<double>(t)));
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(apply_global(local, std::vector<GlobalMotion>(4)), Error);
  }
}

TEST_CASE("preprocess of simple motions") {
  const Skeleton s = template_skeleton();
  SUBCASE("stationary T-pose") {
    const MotionClip c = preprocess(static_tpose(s, 10, Vec3::Zero(), Vec3::Zero(), 0.0), s);
    for (std::size_t t = 0; t < 10; ++t) {
      CHECK(c.global[t].velocity.norm() < 1e-12);
      CHECK(std::abs(c.global[t].dyaw) < 1e-12);
      for (std::size_t n = 0; n < s.size(); ++n) {
        CHECK((c.local[t][n] - s.local_tpose()[n]).norm() < 1e-12);
      }
    }
  }
  SUBCASE("translation along x") {
    const MotionClip c = preprocess(static_tpose(s, 10, Vec3::Zero(), Vec3(1, 0, 0), 0.0), s);
    for (std::size_t t = 0; t < 10; ++t) {
      CHECK((c.global[t].velocity - Vec3(1, 0, 0)).norm() < 1e-12);
      CHECK(std::abs(c.global[t].dyaw) < 1e-12);
      CHECK((c.local[t][5] - s.local_tpose()[5]).norm() < 1e-12);
    }
  }
  SUBCASE("spin at 2 degrees per frame") {
    const auto absolute = static_tpose(s, 200, Vec3(3, 0, -7), Vec3(0.5, 0, 0.25), 2.0);
    const MotionClip c = preprocess(absolute, s);
    for (std::size_t t = 0; t < c.length(); ++t) {
      CHECK(c.global[t].dyaw == doctest::Approx(2.0).epsilon(1e-6));
    }
    CHECK(max_error(world_positions(c), absolute) < 1e-5);
  }
  SUBCASE("too short") {
    CHECK_THROWS_AS(preprocess(static_tpose(s, 1, Vec3::Zero(), Vec3::Zero(), 0.0), s), Error);
  }
}

TEST_CASE("synthetic performances round-trip and are yaw invariant") {
  Rng rng(61);
  for (int trial = 0; trial < 12; ++trial) {
    const auto kind = static_cast<MotionKind>(trial % 4);
    const Skeleton s = make_character("c", random_bone_scales(rng));
    const Performance perf = generate_performance(random_motion_params(rng, kind), 90);
    const auto absolute = perform_absolute(perf, s);
    const MotionClip clip = perform(perf, s);
    CHECK(max_error(world_positions(clip), absolute) < 1e-5);

    // Carried rotations reproduce the local poses.
    for (std::size_t t = 0; t < clip.length(); ++t) {
      const auto p = fk_forward(clip.rotations[t], s);
      for (std::size_t n = 0; n < s.size(); ++n) {
        CHECK((p[n] - clip.local[t][n]).norm() < 1e-9);
      }
    }

    const Mat3 spin = yaw_matrix(uniform(rng, -180, 180));
    std::vector<Pose> turned = absolute;
    for (auto& pose : turned) {
      for (auto& p : pose) {
        p = spin * p;
      }
    }
    const MotionClip other = preprocess(turned, s);
    CHECK(max_error(other.local, clip.local) < 1e-5);
    for (std::size_t t = 0; t < clip.length(); ++t) {
      CHECK((other.global[t].velocity - clip.global[t].velocity).norm() < 1e-6);
    }
  }
}

TEST_CASE("window carries the start state forward") {
  Rng rng(67);
  const Skeleton s = make_character("c", random_bone_scales(rng));
  const MotionClip clip = perform(generate_performance(random_motion_params(rng, MotionKind::kWalk), 80), s);
  const MotionClip w = clip.window(30, 40);
  const auto full = world_positions(clip);
  const auto part = world_positions(w);
  for (std::size_t t = 0; t < 40; ++t) {
    for (std::size_t n = 0; n < s.size(); ++n) {
      CHECK((part[t][n] - full[t + 30][n]).norm() < 1e-9);
    }
  }
  CHECK_THROWS_AS(clip.window(70, 20), Error);
}

TEST_CASE("synthetic twist angles stay within 45 degrees") {
  Rng rng(71);
  for (int k = 0; k < 4; ++k) {
    const Performance perf =
        generate_performance(random_motion_params(rng, static_cast<MotionKind>(k)), 120);
    const MotionClip clip = perform(perf, template_skeleton());
    for (const auto& frame : clip.rotations) {
      for (std::size_t n = 1; n < frame.size(); ++n) {
        CHECK(std::abs(quat_twist_angle_y(frame[n])) <= 45.0);
      }
    }
  }
}

TEST_CASE("bone scales are bounded") {
  Rng rng(73);
  for (int i = 0; i < 100; ++i) {
    for (double v : random_bone_scales(rng).values()) {
      CHECK(v >= kMinBoneScale);
      CHECK(v <= kMaxBoneScale);
    }
  }
  BoneScales bad;
  bad.arms = 1.7;
  CHECK_THROWS_AS(make_character("x", bad), Error);
}
