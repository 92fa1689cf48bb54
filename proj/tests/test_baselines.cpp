#include "kinnet/baselines.hpp"
#include "kinnet/dataset.hpp"
#include "kinnet/errors.hpp"
#include "kinnet/evaluation.hpp"
#include "kinnet/synthetic.hpp"

#include <doctest.h>

using namespace kinnet;

namespace {

MotionClip walk_on(const Skeleton& s, std::uint64_t seed) {
  Rng rng(seed);
  return perform(generate_performance(random_motion_params(rng, MotionKind::kWalk), 40), s);
}

}  // namespace

TEST_CASE("copy baseline on the input's own skeleton returns the input") {
  Rng rng(1);
  const Skeleton s = make_character("a", random_bone_scales(rng));
  const MotionClip in = walk_on(s, 2);
  const MotionClip out = copy_retarget(in, s);
  REQUIRE(out.length() == in.length());
  for (std::size_t t = 0; t < in.length(); ++t) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      CHECK((out.local[t][j] - in.local[t][j]).norm() < 1e-9);
    }
    CHECK(out.global[t].velocity == in.global[t].velocity);
    CHECK(out.global[t].dyaw == in.global[t].dyaw);
  }
  CHECK(mse(out, in) <= 1e-10);
}

TEST_CASE("copy baseline is exact on rotation-copied ground truth") {
  DatasetConfig c;
  c.characters = 4;
  c.motions = 8;
  c.test_frames = 40;
  c.train_frames = 40;
  c.seed = 3;
  const Dataset ds = generate_dataset(c);
  REQUIRE_FALSE(ds.test.empty());
  for (const TestPair& p : ds.test) {
    const MotionClip out = copy_retarget(p.input, p.truth.skeleton);
    CHECK(mse(out, p.truth) <= 1e-10);
    for (const Pose& pose : out.local) {
      for (std::size_t j = 1; j < pose.size(); ++j) {
        const Vec3 bone = pose[j] - pose[out.skeleton.parent(j)];
        CHECK(std::abs(bone.norm() - out.skeleton.bone(j).norm()) <= 1e-9);
      }
    }
  }
}

TEST_CASE("copy baseline needs rotations and matching joints") {
  const Skeleton s = template_skeleton();
  MotionClip in = walk_on(s, 4);
  in.rotations.clear();
  CHECK_THROWS_AS(copy_retarget(in, s), Error);
  const Skeleton tiny("tiny", {{"Root", -1, Vec3(0, 1, 0)}, {"Spine", 0, Vec3(0, 1, 0)}});
  CHECK_THROWS_AS(copy_retarget(walk_on(s, 5), tiny), Error);
}
