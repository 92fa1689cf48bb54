#pragma once

#include "kinnet/discriminator.hpp"
#include "kinnet/losses.hpp"
#include "kinnet/model.hpp"
#include "kinnet/nn/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kinnet {

enum class TrainMode { kAuto, kCycle, kAdvCycle };
const char* train_mode_name(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

struct TrainConfig {
  TrainMode mode = TrainMode::kAdvCycle;
  GeneratorKind generator = GeneratorKind::kKinematic;
  ModelConfig model = ModelConfig::desk();
  DiscriminatorConfig discriminator = DiscriminatorConfig::desk();
  LossWeights weights;
  bool non_saturating = true;
  int batch = 16;
  int window = 60;
  double lr = 1e-4;
  double clip_norm = 25.0;
  double balance = 0.3;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Per-step values; losses are batch means of per-sequence sums.
struct StepMetrics {
  long step = 0;
  double cycle = 0.0;
  double r_gen = 0.0;
  double r_disc = 0.0;  // discriminator objective log r_real + log(1 - r_fake)
  double twist = 0.0;
  double smooth = 0.0;
  double r_a_mean = 0.0;
  double r_b_mean = 0.0;
  double total = 0.0;
  bool disc_updated = false;
};

inline constexpr const char* kMetricCsvHeader = "step,C,R_gen,R_disc,J,S,rA_mean,rB_mean";
std::string metric_csv_row(const StepMetrics& m);

// One training batch: windows of `window` frames, each with its source clip
// and the character it is retargetted to.
struct Batch {
  std::vector<const MotionClip*> clips;
  std::vector<std::size_t> begin;
  std::vector<int> target;  // index into the trainer's skeleton list
};

class Trainer {
 public:
  // `clips` must outlive the trainer. Skeletons are the distinct characters
  // of the clips, in first-appearance order.
  Trainer(const std::vector<MotionClip>& clips, TrainConfig config);

  const TrainConfig& config() const { return config_; }
  Generator& generator() { return *generator_; }
  const Generator& generator() const { return *generator_; }
  Discriminator* discriminator() { return discriminator_.get(); }
  long step_count() const { return step_; }
  const std::vector<Skeleton>& skeletons() const { return skeletons_; }

  Batch sample_batch();
  // Forward, backward and parameter updates for one batch.
  StepMetrics train_step(const Batch& batch);
  StepMetrics train_step() { return train_step(sample_batch()); }

  // Losses on a batch without touching parameters. Dropout is off.
  StepMetrics evaluate(const Batch& batch) const;

  // Overrides the balancing decision's input, for tests of the freeze rule.
  void force_r_b_mean(std::optional<double> value) { forced_r_b_ = value; }

  // Runs until step_count() == steps. Appends CSV rows to `metrics` (header
  // written when the stream is empty on entry) and saves a checkpoint every
  // `checkpoint_every` steps when `checkpoint` is set.
  void run(long steps, std::ostream* metrics = nullptr,
           const std::filesystem::path* checkpoint = nullptr, long checkpoint_every = 0,
           const std::function<void(const StepMetrics&)>& on_step = {});

  nn::Checkpoint checkpoint() const;
  void save(const std::filesystem::path& path) const;
  // Restores parameters, optimizer moments, step count and random state.
  void resume(const nn::Checkpoint& ckpt);

 private:
  struct Pass;
  Pass forward(nn::Tape& tape, const Batch& batch) const;
  void discriminator_step(const Batch& batch, const Pass& pass, StepMetrics& m);

  const std::vector<MotionClip>& clips_;
  TrainConfig config_;
  std::vector<Skeleton> skeletons_;
  std::vector<Skeleton> normalized_;
  std::vector<int> clip_skeleton_;
  std::vector<std::vector<std::size_t>> clips_of_skeleton_;
  std::unique_ptr<Generator> generator_;
  std::unique_ptr<Discriminator> discriminator_;
  nn::Adam gen_opt_;
  nn::Adam disc_opt_;
  Rng rng_;
  long step_ = 0;
  std::optional<double> forced_r_b_;
};

std::string rng_state(const Rng& rng);
Rng rng_from_state(const std::string& state);

}  // namespace kinnet
