#include "kinnet/dataset.hpp"

#include "kinnet/clip_io.hpp"
#include "kinnet/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace kinnet {

namespace fs = std::filesystem;
using nlohmann::json;

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kKnownMotionKnownCharacter: return "known_motion/known_character";
    case Scenario::kKnownMotionNewCharacter: return "known_motion/new_character";
    case Scenario::kNewMotionKnownCharacter: return "new_motion/known_character";
    case Scenario::kNewMotionNewCharacter: return "new_motion/new_character";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : kScenarios) {
    if (name == scenario_name(s)) return s;
  }
  throw FormatError("unknown scenario '" + name + "'");
}

bool is_new_character(Scenario s) {
  return s == Scenario::kKnownMotionNewCharacter || s == Scenario::kNewMotionNewCharacter;
}

int DatasetConfig::held_out_characters() const {
  return std::max(1, static_cast<int>(std::lround(characters / 3.0)));
}

int DatasetConfig::held_out_motions() const { return std::max(1, motions / 4); }

std::vector<const Skeleton*> Dataset::training_skeletons() const {
  std::vector<const Skeleton*> out;
  for (const Character& c : characters) {
    if (!c.held_out) out.push_back(&c.skeleton);
  }
  return out;
}

const Character& Dataset::character(const std::string& name) const {
  for (const Character& c : characters) {
    if (c.skeleton.name() == name) return c;
  }
  throw Error("unknown character '" + name + "'");
}

namespace {

constexpr MotionKind kKinds[] = {MotionKind::kWalk, MotionKind::kArmWave, MotionKind::kIdleSway,
                                 MotionKind::kTurnInPlace};

MotionClip tag(MotionClip clip, const std::string& motion, const std::string& split) {
  clip.info.motion = motion;
  clip.info.character = clip.skeleton.name();
  clip.info.split = split;
  return clip;
}

}  // namespace

Dataset generate_dataset(const DatasetConfig& config) {
  if (config.characters < 2) {
    throw Error("dataset needs at least 2 characters, got " + std::to_string(config.characters));
  }
  if (config.motions < 2) {
    throw Error("dataset needs at least 2 motions, got " + std::to_string(config.motions));
  }
  if (config.test_frames < 2 || config.train_frames < 2) {
    throw Error("clips need at least 2 frames");
  }
  Dataset ds;
  ds.config = config;
  const int held_chars = config.held_out_characters();
  const int n_train_chars = config.characters - held_chars;
  Rng char_rng = derive_rng(config.seed, 1);
  for (int c = 0; c < config.characters; ++c) {
    Character ch;
    ch.scales = random_bone_scales(char_rng);
    ch.held_out = c >= n_train_chars;
    ch.skeleton = make_character("char" + std::to_string(c), ch.scales);
    ds.characters.push_back(std::move(ch));
  }

  const int n_known = config.motions - config.held_out_motions();
  const auto frames =
      static_cast<std::size_t>(std::max(config.train_frames, config.test_frames));
  std::vector<Performance> perf;
  std::vector<std::string> names;
  for (int m = 0; m < config.motions; ++m) {
    Rng rng = derive_rng(config.seed, 1000 + static_cast<std::uint64_t>(m));
    const MotionKind kind = kKinds[m % 4];
    perf.push_back(generate_performance(random_motion_params(rng, kind), frames, config.fps));
    names.push_back(std::string(motion_kind_name(kind)) + "_" + std::to_string(m));
  }
  auto performer = [&](int m) { return m % n_train_chars; };

  for (int m = 0; m < n_known; ++m) {
    const Skeleton& sk = ds.characters[performer(m)].skeleton;
    MotionClip clip = perform(perf[m], sk);
    ds.train.push_back(
        tag(clip.window(0, static_cast<std::size_t>(config.train_frames)), names[m], "train"));
  }

  Rng pair_rng = derive_rng(config.seed, 2);
  auto pick_target = [&](int source, bool held) {
    std::vector<int> pool;
    for (int c = 0; c < config.characters; ++c) {
      if (ds.characters[c].held_out == held && c != source) pool.push_back(c);
    }
    if (pool.empty()) return -1;
    return pool[uniform_index(pair_rng, pool.size())];
  };
  const auto test_len = static_cast<std::size_t>(config.test_frames);
  for (Scenario s : kScenarios) {
    const bool new_motion =
        s == Scenario::kNewMotionKnownCharacter || s == Scenario::kNewMotionNewCharacter;
    const int first = new_motion ? n_known : 0;
    const int count = new_motion ? config.motions - n_known : n_known;
    const int pairs = std::min(count, config.pairs_per_scenario);
    for (int k = 0; k < pairs; ++k) {
      const int m = first + static_cast<int>(static_cast<long>(k) * count / pairs);
      const int src = performer(m);
      const int dst = pick_target(src, is_new_character(s));
      if (dst < 0) continue;
      TestPair p;
      p.scenario = s;
      p.id = std::string(new_motion ? "nm" : "km") + (is_new_character(s) ? "_nc_" : "_kc_") +
             std::to_string(k);
      p.input = tag(perform(perf[m], ds.characters[src].skeleton).window(0, test_len), names[m],
                    "test");
      p.truth = tag(perform(perf[m], ds.characters[dst].skeleton).window(0, test_len), names[m],
                    "test");
      p.input.info.scenario = p.truth.info.scenario = scenario_name(s);
      p.truth.info.source_character = p.input.skeleton.name();
      ds.test.push_back(std::move(p));
    }
  }

  // Held-out characters and motions never appear in training.
  std::set<std::string> train_motions, train_chars;
  for (const MotionClip& c : ds.train) {
    train_motions.insert(c.info.motion);
    train_chars.insert(c.skeleton.name());
  }
  for (const TestPair& p : ds.test) {
    const bool nm = p.scenario == Scenario::kNewMotionKnownCharacter ||
                    p.scenario == Scenario::kNewMotionNewCharacter;
    if (nm && train_motions.count(p.input.info.motion)) {
      throw Error("held-out motion leaked into training");
    }
    if (is_new_character(p.scenario) && train_chars.count(p.truth.skeleton.name())) {
      throw Error("held-out character leaked into training");
    }
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir / "skeletons");
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  json chars = json::array();
  for (const Character& c : ds.characters) {
    const auto v = c.scales.values();
    chars.push_back({{"name", c.skeleton.name()},
                     {"held_out", c.held_out},
                     {"scales", std::vector<double>(v.begin(), v.end())}});
    write_text_file(dir / "skeletons" / (c.skeleton.name() + ".json"),
                    write_skeleton_json(c.skeleton));
  }
  json train = json::array();
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    const std::string file = "train/" + std::to_string(i) + ".json";
    write_text_file(dir / file, write_clip_json(ds.train[i]));
    train.push_back(file);
  }
  json test = json::array();
  for (const TestPair& p : ds.test) {
    const std::string in = "test/" + p.id + ".input.json";
    const std::string truth = "test/" + p.id + ".truth.json";
    write_text_file(dir / in, write_clip_json(p.input));
    write_text_file(dir / truth, write_clip_json(p.truth));
    test.push_back({{"id", p.id},
                    {"scenario", scenario_name(p.scenario)},
                    {"input", in},
                    {"truth", truth},
                    {"target", p.truth.skeleton.name()}});
  }
  const DatasetConfig& c = ds.config;
  json manifest = {{"format", "kinnet.dataset"},
                   {"version", 1},
                   {"config",
                    {{"characters", c.characters},
                     {"motions", c.motions},
                     {"seed", c.seed},
                     {"train_frames", c.train_frames},
                     {"test_frames", c.test_frames},
                     {"pairs_per_scenario", c.pairs_per_scenario},
                     {"fps", c.fps}}},
                   {"characters", chars},
                   {"train", train},
                   {"test", test}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  json m;
  try {
    m = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw FormatError("dataset manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != "kinnet.dataset") {
    throw FormatError(dir.string() + " is not a kinnet dataset");
  }
  Dataset ds;
  try {
    const json& c = m.at("config");
    ds.config.characters = c.at("characters");
    ds.config.motions = c.at("motions");
    ds.config.seed = c.at("seed");
    ds.config.train_frames = c.at("train_frames");
    ds.config.test_frames = c.at("test_frames");
    ds.config.pairs_per_scenario = c.at("pairs_per_scenario");
    ds.config.fps = c.at("fps");
    for (const json& cj : m.at("characters")) {
      Character ch;
      const std::string name = cj.at("name");
      ch.skeleton = parse_skeleton_json(read_text_file(dir / "skeletons" / (name + ".json")));
      ch.held_out = cj.at("held_out");
      const auto s = cj.at("scales").get<std::vector<double>>();
      if (s.size() != 6) throw FormatError("character '" + name + "' needs 6 scales");
      ch.scales = {s[0], s[1], s[2], s[3], s[4], s[5]};
      ds.characters.push_back(std::move(ch));
    }
    for (const json& f : m.at("train")) {
      ds.train.push_back(parse_clip_json(read_text_file(dir / f.get<std::string>())));
    }
    for (const json& t : m.at("test")) {
      TestPair p;
      p.id = t.at("id");
      p.scenario = parse_scenario(t.at("scenario"));
      p.input = parse_clip_json(read_text_file(dir / t.at("input").get<std::string>()));
      p.truth = parse_clip_json(read_text_file(dir / t.at("truth").get<std::string>()));
      ds.test.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw FormatError("dataset manifest: " + std::string(e.what()));
  }
  return ds;
}

}  // namespace kinnet
