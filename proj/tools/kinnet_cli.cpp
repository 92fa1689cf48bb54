#include "kinnet/baselines.hpp"
#include "kinnet/bvh.hpp"
#include "kinnet/clip_io.hpp"
#include "kinnet/dataset.hpp"
#include "kinnet/errors.hpp"
#include "kinnet/evaluation.hpp"
#include "kinnet/model.hpp"
#include "kinnet/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace kinnet;

namespace {

// Bad flag values or combinations; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { kQuiet, kInfo, kDebug };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* v = std::getenv("KINNET_LOG");
    const std::string s = v ? v : "info";
    if (s == "quiet" || s == "0") return LogLevel::kQuiet;
    if (s == "debug" || s == "2") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

void info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) std::cerr << msg << '\n';
}

struct GenDataArgs {
  int characters = 6;
  int motions = 40;
  std::uint64_t seed = 0;
  int train_frames = 150;
  int test_frames = 120;
  int pairs = 10;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string mode = "adv-cycle";
  std::string model = "kinematic";
  std::string preset = "desk";
  long steps = 2000;
  std::uint64_t seed = 0;
  std::string out;
  std::string metrics;
  long checkpoint_every = 0;
  bool resume = false;
  double beta = 0.001;
  double alpha = 100.0;
  double lambda = 10.0;
  double omega = 0.01;
  double lr = 1e-4;
  double clip_norm = 25.0;
  double balance = 0.3;
  int batch = 16;
  int window = 60;
  int hidden = 0;
  bool literal_adversarial = false;
};

struct RetargetArgs {
  std::string model;
  std::string input;
  std::string target;
  std::string out;
  std::string baseline;
  std::string mapping;
  std::string test_set;
};

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string report;
  bool bins = false;
};

struct ExportArgs {
  std::string clip;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  if (a.characters < 2) throw UsageError("--characters must be at least 2");
  if (a.motions < 2) throw UsageError("--motions must be at least 2");
  DatasetConfig c;
  c.characters = a.characters;
  c.motions = a.motions;
  c.seed = a.seed;
  c.train_frames = a.train_frames;
  c.test_frames = a.test_frames;
  c.pairs_per_scenario = a.pairs;
  const Dataset ds = generate_dataset(c);
  save_dataset(ds, a.out);
  info("wrote " + std::to_string(ds.train.size()) + " training clips and " +
       std::to_string(ds.test.size()) + " test pairs to " + a.out);
  return 0;
}

int cmd_train(const TrainArgs& a) {
  TrainConfig c;
  try {
    c.mode = parse_train_mode(a.mode);
    c.generator = parse_generator_kind(a.model);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (a.preset == "paper") {
    c.model = ModelConfig::paper();
    c.discriminator = DiscriminatorConfig::paper();
  } else if (a.preset != "desk") {
    throw UsageError("--preset must be desk or paper");
  }
  if (a.hidden > 0) c.model.hidden = a.hidden;
  if (a.steps < 0) throw UsageError("--steps must not be negative");
  if (a.batch < 1) throw UsageError("--batch must be positive");
  c.weights = {a.beta, a.alpha, a.lambda, a.omega};
  c.non_saturating = !a.literal_adversarial;
  c.batch = a.batch;
  c.window = a.window;
  c.lr = a.lr;
  c.clip_norm = a.clip_norm;
  c.balance = a.balance;
  c.seed = a.seed;

  const Dataset ds = load_dataset(a.data);
  if (c.mode == TrainMode::kAdvCycle && ds.training_skeletons().size() < 2) {
    throw UsageError("adv-cycle training needs at least 2 training characters; the dataset has " +
                     std::to_string(ds.training_skeletons().size()));
  }
  if (c.mode == TrainMode::kAdvCycle && c.window - 1 < kMinDiscriminatorLength) {
    throw UsageError("adv-cycle training needs --window of at least " +
                     std::to_string(kMinDiscriminatorLength + 1));
  }
  Trainer trainer(ds.train, c);
  const fs::path out = a.out;
  const fs::path metrics = a.metrics.empty() ? fs::path(a.out + ".metrics.csv") : fs::path(a.metrics);
  if (a.resume && fs::exists(out)) {
    trainer.resume(nn::load_checkpoint(out));
    info("resumed from step " + std::to_string(trainer.step_count()));
  }
  std::ofstream csv(metrics, a.resume ? std::ios::app : std::ios::trunc);
  if (!csv) throw Error("cannot write " + metrics.string());
  const fs::path* ckpt = a.checkpoint_every > 0 ? &out : nullptr;
  trainer.run(a.steps, &csv, ckpt, a.checkpoint_every, [&](const StepMetrics& m) {
    const long s = m.step + 1;
    if (s % 100 == 0 || s == a.steps) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "step %ld C=%.4g R=%.4g J=%.4g S=%.4g rA=%.3f rB=%.3f", s,
                    m.cycle, m.r_gen, m.twist, m.smooth, m.r_a_mean, m.r_b_mean);
      info(buf);
    } else {
      debug("step " + std::to_string(s) + " total=" + std::to_string(m.total));
    }
  });
  trainer.save(out);
  info("saved " + out.string());
  return 0;
}

std::string extension(const std::string& path) {
  std::string e = fs::path(path).extension().string();
  for (char& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e;
}

MotionClip load_input(const RetargetArgs& a) {
  const std::string text = read_text_file(a.input);
  const std::string stem = fs::path(a.input).stem().string();
  if (extension(a.input) == ".bvh") {
    const CanonicalMotion m = to_canonical(parse_bvh(text), stem);
    return preprocess(m.positions, m.skeleton, m.fps, &m.rotations);
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(a.input + ": " + e.what(), 0);
  }
  if (doc.value("format", "") == "kinnet.positions") {
    JointMapping mapping;
    if (!a.mapping.empty()) mapping = parse_joint_mapping_json(read_text_file(a.mapping));
    const auto [skeleton, frames] = map_to_canonical(parse_positions_json(text), mapping, stem);
    return preprocess(frames, skeleton, parse_positions_json(text).fps);
  }
  return parse_clip_json(text);
}

MotionClip run_retarget(const Generator* gen, const std::string& baseline, const MotionClip& in,
                        const Skeleton& target) {
  if (baseline == "copy") return copy_retarget(in, target);
  return retarget(*gen, in, target);
}

int cmd_retarget(const RetargetArgs& a) {
  if (!a.baseline.empty() && a.baseline != "copy" && a.baseline != "rnn" && a.baseline != "mlp") {
    throw UsageError("--baseline must be copy, rnn or mlp");
  }
  if (a.baseline != "copy" && a.model.empty()) {
    throw UsageError("--model is required unless --baseline copy");
  }
  if (a.test_set.empty() && (a.input.empty() || a.target.empty())) {
    throw UsageError("give --input and --target-skeleton, or --test-set");
  }
  std::unique_ptr<Generator> gen;
  if (a.baseline != "copy") {
    gen = load_generator(fs::path(a.model));
    const GeneratorKind want = a.baseline.empty() ? GeneratorKind::kKinematic
                                                  : parse_generator_kind(a.baseline);
    if (gen->kind() != want) {
      throw UsageError(a.model + " holds a " + generator_kind_name(gen->kind()) +
                       " model, not " + generator_kind_name(want));
    }
  }
  if (!a.test_set.empty()) {
    const Dataset ds = load_dataset(a.test_set);
    fs::create_directories(a.out);
    for (const TestPair& p : ds.test) {
      write_text_file(fs::path(a.out) / (p.id + ".json"),
                      write_clip_json(run_retarget(gen.get(), a.baseline, p.input,
                                                   p.truth.skeleton)));
    }
    info("retargetted " + std::to_string(ds.test.size()) + " test clips into " + a.out);
    return 0;
  }
  const MotionClip in = load_input(a);
  const Skeleton target = parse_skeleton_json(read_text_file(a.target));
  write_text_file(a.out, write_clip_json(run_retarget(gen.get(), a.baseline, in, target)));
  info("wrote " + a.out);
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  EvalReport report;
  const fs::path truth = a.truth;
  const fs::path pred = a.pred;
  if (fs::exists(truth / "manifest.json")) {
    const Dataset ds = load_dataset(truth);
    for (const TestPair& p : ds.test) {
      const fs::path f = pred / (p.id + ".json");
      if (!fs::exists(f)) throw Error("missing prediction " + f.string());
      report.clips.push_back(score_clip(p.id, parse_clip_json(read_text_file(f)), p.truth));
    }
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(truth)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      const fs::path p = pred / f.filename();
      if (!fs::exists(p)) throw Error("missing prediction " + p.string());
      report.clips.push_back(score_clip(f.stem().string(), parse_clip_json(read_text_file(p)),
                                        parse_clip_json(read_text_file(f))));
    }
  }
  if (report.clips.empty()) throw Error("no clips to evaluate in " + truth.string());
  if (!a.report.empty()) write_text_file(a.report, report.to_json(a.bins).dump(2) + "\n");
  std::cout << report.table(a.bins);
  return 0;
}

int cmd_export(const ExportArgs& a) {
  const MotionClip clip = parse_clip_json(read_text_file(a.clip));
  write_text_file(a.out, write_end_effector_csv(end_effectors(clip)));
  info("wrote " + a.out);
  return 0;
}

// Config files are flat JSON objects keyed by flag name without dashes.
// Entries whose flag is absent from the command line are appended to it, so
// flags take precedence over the file.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return args;
  CLI::App* sub = nullptr;
  for (const std::string& a : rest) {
    if (a.rfind("-", 0) != 0) {
      sub = app.get_subcommand_no_throw(a);
      break;
    }
  }
  if (!sub) throw UsageError("--config needs a command");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config " + path + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt) {
      throw UsageError("config key '" + key + "' is not a flag of '" + sub->get_name() + "'");
    }
    bool given = false;
    for (const std::string& a : rest) {
      given = given || a == flag || a.rfind(flag + "=", 0) == 0;
    }
    if (given) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) rest.push_back(flag);
    } else if (value.is_string()) {
      rest.push_back(flag);
      rest.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      rest.push_back(flag);
      rest.push_back(value.dump());
    } else {
      throw UsageError("config key '" + key + "' must be a string, number or boolean");
    }
  }
  return rest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural kinematic networks for motion retargetting"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("--config", config, "Flat JSON object of flag values (flags take precedence)");

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset with ground truth");
  gen->add_option("--characters", gd.characters, "Number of characters (a third held out)");
  gen->add_option("--motions", gd.motions, "Number of motions (a quarter held out)");
  gen->add_option("--seed", gd.seed);
  gen->add_option("--train-frames", gd.train_frames);
  gen->add_option("--test-frames", gd.test_frames);
  gen->add_option("--pairs", gd.pairs, "Test pairs per scenario");
  gen->add_option("--out", gd.out)->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a retargetting network");
  train->add_option("--data", tr.data)->required();
  train->add_option("--mode", tr.mode, "auto, cycle or adv-cycle");
  train->add_option("--model", tr.model, "kinematic, rnn or mlp");
  train->add_option("--preset", tr.preset, "desk or paper sizes");
  train->add_option("--steps", tr.steps);
  train->add_option("--seed", tr.seed);
  train->add_option("--out", tr.out)->required();
  train->add_option("--metrics", tr.metrics, "Metric CSV (default <out>.metrics.csv)");
  train->add_option("--checkpoint-every", tr.checkpoint_every);
  train->add_flag("--resume", tr.resume, "Continue from --out if it exists");
  train->add_option("--beta", tr.beta);
  train->add_option("--alpha", tr.alpha);
  train->add_option("--lambda", tr.lambda);
  train->add_option("--omega", tr.omega);
  train->add_option("--lr", tr.lr);
  train->add_option("--clip-norm", tr.clip_norm);
  train->add_option("--balance", tr.balance);
  train->add_option("--batch", tr.batch);
  train->add_option("--window", tr.window);
  train->add_option("--hidden", tr.hidden, "Override the preset's GRU width");
  train->add_flag("--literal-adversarial", tr.literal_adversarial,
                  "Generator minimizes beta*log(1-r) instead of -beta*log(r)");

  RetargetArgs rt;
  auto* ret = app.add_subcommand("retarget", "Retarget a clip onto a skeleton");
  ret->add_option("--model", rt.model, "Checkpoint");
  ret->add_option("--input", rt.input, "Clip JSON, positions JSON or BVH");
  ret->add_option("--target-skeleton", rt.target);
  ret->add_option("--out", rt.out)->required();
  ret->add_option("--baseline", rt.baseline, "copy, rnn or mlp");
  ret->add_option("--mapping", rt.mapping, "Joint mapping for positions input");
  ret->add_option("--test-set", rt.test_set, "Retarget every test pair of a dataset into --out");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", ev.pred)->required();
  eval->add_option("--truth", ev.truth)->required();
  eval->add_option("--report", ev.report);
  eval->add_flag("--bins", ev.bins, "Add movement-variance bins");

  ExportArgs ex;
  auto* exp = app.add_subcommand("export-traj", "Write end-effector trajectories as CSV");
  exp->add_option("--clip", ex.clip)->required();
  exp->add_option("--out", ex.out)->required();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(args, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    CLI::App* sub = app.get_subcommands().front();
    if (sub == gen) return cmd_gen_data(gd);
    if (sub == train) return cmd_train(tr);
    if (sub == ret) return cmd_retarget(rt);
    if (sub == eval) return cmd_eval(ev);
    if (sub == exp) return cmd_export(ex);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
