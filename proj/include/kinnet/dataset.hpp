#pragma once

#include "kinnet/motion.hpp"
#include "kinnet/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kinnet {

enum class Scenario { kKnownMotionKnownCharacter, kKnownMotionNewCharacter,
                      kNewMotionKnownCharacter, kNewMotionNewCharacter };
inline constexpr Scenario kScenarios[] = {
    Scenario::kKnownMotionKnownCharacter, Scenario::kKnownMotionNewCharacter,
    Scenario::kNewMotionKnownCharacter, Scenario::kNewMotionNewCharacter};
const char* scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);
bool is_new_character(Scenario s);

struct DatasetConfig {
  int characters = 6;   // total; a third (at least one) is held out
  int motions = 40;     // the last quarter (at least one) is held out
  std::uint64_t seed = 0;
  int train_frames = 150;
  int test_frames = 120;
  int pairs_per_scenario = 10;
  double fps = 30.0;

  int held_out_characters() const;
  int held_out_motions() const;
};

struct Character {
  Skeleton skeleton;
  BoneScales scales;
  bool held_out = false;
};

// An input performance, the skeleton to retarget it to, and the same
// performance played on that skeleton.
struct TestPair {
  std::string id;
  Scenario scenario = Scenario::kKnownMotionKnownCharacter;
  MotionClip input;
  MotionClip truth;
};

// Every known motion is performed by exactly one training character, so no
// training clip is paired with another character's version of it.
struct Dataset {
  DatasetConfig config;
  std::vector<Character> characters;
  std::vector<MotionClip> train;
  std::vector<TestPair> test;

  std::vector<const Skeleton*> training_skeletons() const;
  const Character& character(const std::string& name) const;
};

// Ground truth uses rotation-copy semantics: the same joint rotations played
// on each character, with the root trajectory scaled by the height ratio.
// Bit-reproducible per seed.
Dataset generate_dataset(const DatasetConfig& config);

// Directory layout: manifest.json, skeletons/<name>.json, train/<i>.json,
// test/<id>.input.json and test/<id>.truth.json.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace kinnet
