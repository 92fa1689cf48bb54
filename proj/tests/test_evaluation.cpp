#include "kinnet/clip_io.hpp"
#include "kinnet/dataset.hpp"
#include "kinnet/errors.hpp"
#include "kinnet/evaluation.hpp"
#include "kinnet/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

using namespace kinnet;

namespace {

MotionClip static_clip(const Skeleton& s, std::size_t frames) {
  MotionClip c;
  c.skeleton = s;
  c.start_position = s.root_position();
  c.local.assign(frames, s.local_tpose());
  c.global.assign(frames, GlobalMotion{});
  return c;
}

DatasetConfig small_config(std::uint64_t seed) {
  DatasetConfig c;
  c.characters = 4;
  c.motions = 8;
  c.train_frames = 50;
  c.test_frames = 30;
  c.pairs_per_scenario = 3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("height-normalized mse") {
  const Skeleton s = template_skeleton();
  const MotionClip a = static_clip(s, 5);
  CHECK(mse(a, a) == 0.0);
  MotionClip b = a;
  b.start_position += Vec3(s.height(), 0, 0);
  CHECK(mse(b, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(mse(a, static_clip(s, 4)), Error);
}

TEST_CASE("mse is invariant to a shared global yaw") {
  Rng rng(1);
  const Skeleton s = make_character("a", random_bone_scales(rng));
  const auto perf = generate_performance(random_motion_params(rng, MotionKind::kWalk), 30);
  MotionClip truth = perform(perf, s);
  MotionClip pred = truth;
  for (Pose& p : pred.local) {
    for (Vec3& v : p) v += Vec3(gaussian(rng), gaussian(rng), gaussian(rng));
  }
  const double base = mse(pred, truth);
  CHECK(base > 0.0);
  for (double yaw : {30.0, -75.0, 180.0}) {
    MotionClip p2 = pred, t2 = truth;
    for (MotionClip* c : {&p2, &t2}) {
      c->start_yaw += yaw;
      c->start_position = yaw_matrix(yaw) * c->start_position;
    }
    CHECK(mse(p2, t2) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("movement variance and bins") {
  const Skeleton s = template_skeleton();
  const double h = s.height();
  const MotionClip still = static_clip(s, 10);
  CHECK(movement_variance(still, h) == 0.0);
  CHECK(variance_bin(0.0) == 0);

  // One joint alternating +-1 height along x: that joint's variance is 1.
  MotionClip osc = static_clip(s, 20);
  for (std::size_t t = 0; t < 20; ++t) {
    osc.local[t][17].x() += (t % 2 == 0 ? 1.0 : -1.0) * h;
  }
  const double oracle = 1.0 / static_cast<double>(s.size());
  CHECK(std::abs(movement_variance(osc, h) - oracle) < 1e-6);

  for (std::size_t i = 1; i < kVarianceBinEdges.size(); ++i) {
    CHECK(kVarianceBinEdges[i] > kVarianceBinEdges[i - 1]);
  }
  CHECK(variance_bin(2.4) == 0);
  CHECK(variance_bin(2.5) == 1);
  CHECK(variance_bin(19.9) == 3);
  CHECK(variance_bin(1e9) == 4);
  CHECK_THROWS_AS(variance_bin(-1.0), NumericError);

  EvalReport r;
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const double v = std::exp(uniform(rng, -3.0, 4.0));
    r.clips.push_back({"c" + std::to_string(i), "s", 1.0, v, variance_bin(v)});
  }
  int total = 0;
  for (const auto& g : r.by_variance_bin()) total += g.count;
  CHECK(total == 50);
}

TEST_CASE("eval report serializes scenarios and bins") {
  EvalReport r;
  r.clips.push_back({"a", "known_motion/known_character", 1.0, 0.1, 0});
  r.clips.push_back({"b", "known_motion/known_character", 3.0, 3.0, 1});
  r.clips.push_back({"c", "new_motion/new_character", 5.0, 30.0, 4});
  CHECK(r.mean_mse() == doctest::Approx(3.0));
  const auto j = r.to_json();
  CHECK(j["scenarios"].size() == 2);
  CHECK(j["scenarios"][0]["mean_mse"] == 2.0);
  CHECK(j["variance_bins"].size() == 5);
  CHECK(j["variance_bins"][4]["high"].is_null());
  CHECK_FALSE(r.to_json(false).contains("variance_bins"));
  CHECK(r.table().find("new_motion/new_character") != std::string::npos);
}

TEST_CASE("end-effector CSV") {
  const Skeleton s = template_skeleton();
  const EndEffectorTrack still = end_effectors(static_clip(s, 6));
  REQUIRE(still.joints.size() == 6);
  for (std::size_t k = 0; k < still.joints.size(); ++k) {
    CHECK(height_total_variation(still, k) == 0.0);
    for (const auto& row : still.frames) CHECK(row[k] == still.frames[0][k]);
  }

  Rng rng(3);
  const auto perf = generate_performance(random_motion_params(rng, MotionKind::kArmWave), 25);
  const EndEffectorTrack track = end_effectors(perform(perf, s));
  const std::string csv = write_end_effector_csv(track);
  CHECK(csv.rfind("frame,LeftHand.x,LeftHand.y,LeftHand.z,RightHand.x", 0) == 0);
  const EndEffectorTrack back = parse_end_effector_csv(csv);
  CHECK(back.joints == track.joints);
  REQUIRE(back.frames.size() == track.frames.size());
  for (std::size_t t = 0; t < track.frames.size(); ++t) {
    CHECK(back.frames[t] == track.frames[t]);
  }
  CHECK_THROWS_AS(parse_end_effector_csv("frame,a.x,a.y,a.z\n0,1,2\n"), ParseError);
  CHECK_THROWS_AS(parse_end_effector_csv("time,a.x\n"), ParseError);
}

TEST_CASE("generated datasets") {
  const Dataset ds = generate_dataset(small_config(7));
  CHECK(ds.characters.size() == 4);
  int held = 0;
  for (const Character& c : ds.characters) {
    held += c.held_out;
    for (double v : c.scales.values()) {
      CHECK(v >= kMinBoneScale);
      CHECK(v <= kMaxBoneScale);
    }
  }
  CHECK(held == 1);

  SUBCASE("splits are disjoint") {
    std::set<std::string> train_motions, train_chars;
    for (const MotionClip& c : ds.train) {
      train_motions.insert(c.info.motion);
      train_chars.insert(c.skeleton.name());
      CHECK_FALSE(ds.character(c.skeleton.name()).held_out);
    }
    CHECK(train_motions.size() == ds.train.size());
    std::set<Scenario> seen;
    for (const TestPair& p : ds.test) {
      seen.insert(p.scenario);
      CHECK(p.input.skeleton.name() != p.truth.skeleton.name());
      CHECK(p.input.info.motion == p.truth.info.motion);
      const bool new_motion = p.scenario == Scenario::kNewMotionKnownCharacter ||
                              p.scenario == Scenario::kNewMotionNewCharacter;
      CHECK(train_motions.count(p.input.info.motion) == (new_motion ? 0u : 1u));
      CHECK(train_chars.count(p.truth.skeleton.name()) == (is_new_character(p.scenario) ? 0u : 1u));
    }
    CHECK(seen.size() == 4);
  }
  SUBCASE("clips reconstruct their absolute trajectories") {
    for (const TestPair& p : ds.test) {
      const auto world = world_positions(p.truth);
      for (std::size_t t = 0; t < world.size(); ++t) {
        for (std::size_t j = 0; j < world[t].size(); ++j) {
          CHECK(std::isfinite(world[t][j].norm()));
        }
      }
    }
    Rng rng(8);
    const auto perf = generate_performance(random_motion_params(rng, MotionKind::kWalk), 40);
    const auto absolute = perform_absolute(perf, ds.characters[0].skeleton);
    const auto world = world_positions(perform(perf, ds.characters[0].skeleton));
    for (std::size_t t = 0; t < world.size(); ++t) {
      for (std::size_t j = 0; j < world[t].size(); ++j) {
        CHECK((world[t][j] - absolute[t][j]).norm() < 1e-5);
      }
    }
  }
  SUBCASE("identical bone scales give identical clips") {
    Rng rng(9);
    const BoneScales scales = random_bone_scales(rng);
    const auto perf = generate_performance(random_motion_params(rng, MotionKind::kIdleSway), 20);
    const MotionClip a = perform(perf, make_character("x", scales));
    const MotionClip b = perform(perf, make_character("x", scales));
    CHECK(write_clip_json(a) == write_clip_json(b));
  }
  SUBCASE("generation is reproducible and round-trips through a directory") {
    const Dataset again = generate_dataset(small_config(7));
    REQUIRE(again.test.size() == ds.test.size());
    for (std::size_t i = 0; i < ds.test.size(); ++i) {
      CHECK(write_clip_json(again.test[i].truth) == write_clip_json(ds.test[i].truth));
    }
    const auto dir = std::filesystem::temp_directory_path() / "kinnet_dataset_test";
    std::filesystem::remove_all(dir);
    save_dataset(ds, dir);
    const Dataset loaded = load_dataset(dir);
    CHECK(loaded.characters.size() == ds.characters.size());
    REQUIRE(loaded.train.size() == ds.train.size());
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
      CHECK(write_clip_json(loaded.train[i]) == write_clip_json(ds.train[i]));
    }
    REQUIRE(loaded.test.size() == ds.test.size());
    CHECK(loaded.test[0].scenario == ds.test[0].scenario);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("too few characters") {
    DatasetConfig c = small_config(1);
    c.characters = 1;
    CHECK_THROWS_AS(generate_dataset(c), Error);
  }
}
