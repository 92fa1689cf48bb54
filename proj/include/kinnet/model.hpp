#pragma once

#include "kinnet/fk.hpp"
#include "kinnet/motion.hpp"
#include "kinnet/nn/checkpoint.hpp"
#include "kinnet/nn/layers.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace kinnet {

enum class GeneratorKind { kKinematic, kRnn, kMlp };
const char* generator_kind_name(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& name);

struct ModelConfig {
  int joints = static_cast<int>(kCanonicalJointCount);
  int hidden = 512;
  int layers = 2;
  // Width of the feed-forward baseline's layers.
  int mlp_width = 512;
  nn::GruVariant gru_variant = nn::GruVariant::kResetBeforeMatmul;
  Composition composition = Composition::kHierarchical;

  // 2-layer GRU with 512 units.
  static ModelConfig paper();
  // Same structure at a width a single CPU core trains in minutes.
  static ModelConfig desk();

  int frame_width() const { return 3 * joints + 4; }
  int skeleton_width() const { return 3 * (joints - 1); }
};

// Maps clips to network features and back. Positions and root velocities are
// divided by the character height; velocities (x, y, z, yaw) are then
// standardized with training-set statistics.
struct FeatureNormalizer {
  std::array<double, 4> velocity_mean{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> velocity_std{1.0, 1.0, 1.0, 1.0};

  static FeatureNormalizer fit(const std::vector<const MotionClip*>& clips);

  // x_t = [p_t / h, standardized v_t], 3N + 4 values.
  std::vector<double> encode(const MotionClip& clip, std::size_t frame) const;
  std::array<double, 4> encode_velocity(const GlobalMotion& motion, double height) const;
  GlobalMotion decode_velocity(const double* features, double height) const;

  nlohmann::json to_json() const;
  static FeatureNormalizer from_json(const nlohmann::json& j);
};

// Rows of `frames` for a batch of clips: out[t] is [B, 3N + 4] for frame
// begin[b] + t of clip b.
std::vector<nn::Tensor> batch_features(const std::vector<const MotionClip*>& clips,
                                       const std::vector<std::size_t>& begin, std::size_t length,
                                       const FeatureNormalizer& normalizer);

// Skeleton as the network sees it: every offset divided by the height.
Skeleton normalized_skeleton(const Skeleton& skeleton);
// [B, 3(N-1)] rows of normalized bone offsets.
nn::Tensor skeleton_features(const std::vector<const Skeleton*>& normalized);

// One synthesized frame.
struct FrameOutput {
  nn::Var pose;      // [B, 3N] root-relative, height-normalized positions
  nn::Var velocity;  // [B, 4] standardized root motion
  nn::Var quats;     // [B, 4N] unit quaternions; id < 0 for position-only generators
  nn::Var frame;     // [B, 3N + 4] = [pose, velocity]
};

struct SequenceOutput {
  std::vector<FrameOutput> frames;
};

// Recurrent and feedback state of an online synthesis pass.
struct StreamState {
  std::vector<nn::Var> encoder;
  std::vector<nn::Var> decoder;
  nn::Var previous;  // x̂_{t-1}
  nn::Var skeleton;  // [B, 3(N-1)]
  std::vector<const Skeleton*> targets;
};

// A retargetting network f(x_{1:T}, s̄) evaluated one frame at a time.
class Generator {
 public:
  Generator(GeneratorKind kind, ModelConfig config, FeatureNormalizer normalizer);
  virtual ~Generator() = default;
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  GeneratorKind kind() const { return kind_; }
  const ModelConfig& config() const { return config_; }
  const FeatureNormalizer& normalizer() const { return normalizer_; }
  void set_normalizer(const FeatureNormalizer& n) { normalizer_ = n; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  bool has_rotations() const { return kind_ == GeneratorKind::kKinematic; }

  // Initial state for a batch; `targets` are normalized skeletons that must
  // outlive the tape. x̂_0 is the targets' T-pose with zero velocity.
  StreamState begin(nn::Tape& tape, const std::vector<const Skeleton*>& targets) const;
  // Consumes x_t [B, 3N + 4] and emits x̂_t.
  virtual FrameOutput step(nn::Tape& tape, StreamState& state, nn::Var input) const = 0;

  // Whole-sequence pass: begin, then step for every frame.
  SequenceOutput run(nn::Tape& tape, const std::vector<nn::Var>& inputs,
                     const std::vector<const Skeleton*>& targets) const;

  nlohmann::json manifest() const;

 protected:
  void check_input(nn::Var input) const;

  GeneratorKind kind_;
  ModelConfig config_;
  FeatureNormalizer normalizer_;
  nn::ParameterSet params_;
};

// Encoder GRU over the input motion, decoder GRU conditioned on the target
// skeleton, quaternion and velocity heads, and the forward-kinematics layer.
class KinematicNetwork : public Generator {
 public:
  KinematicNetwork(ModelConfig config, FeatureNormalizer normalizer, Rng& rng);

  // h_t^enc from x_t; independent of the target skeleton.
  nn::Var encode_step(nn::Tape& tape, nn::Var input, std::vector<nn::Var>& encoder) const;
  // (q̂_t, v̂_t, p̂_t) from [x̂_{t-1}, h_t^enc, s̄].
  FrameOutput decode_step(nn::Tape& tape, nn::Var previous, nn::Var encoded, nn::Var skeleton,
                          const std::vector<const Skeleton*>& targets,
                          std::vector<nn::Var>& decoder) const;
  FrameOutput step(nn::Tape& tape, StreamState& state, nn::Var input) const override;

 private:
  nn::GruStack encoder_;
  nn::GruStack decoder_;
  nn::Linear quat_head_;
  nn::Linear velocity_head_;
};

// Same recurrent encoder/decoder, but the pose head emits xyz coordinates.
class ConditionalRnn : public Generator {
 public:
  ConditionalRnn(ModelConfig config, FeatureNormalizer normalizer, Rng& rng);
  FrameOutput step(nn::Tape& tape, StreamState& state, nn::Var input) const override;

 private:
  nn::GruStack encoder_;
  nn::GruStack decoder_;
  nn::Linear pose_head_;
  nn::Linear velocity_head_;
};

// Per-frame feed-forward network: two ReLU layers encode x_t, two more map
// [encoding, s̄] to coordinates and velocity. No recurrence, no feedback.
class ConditionalMlp : public Generator {
 public:
  ConditionalMlp(ModelConfig config, FeatureNormalizer normalizer, Rng& rng);
  FrameOutput step(nn::Tape& tape, StreamState& state, nn::Var input) const override;

 private:
  nn::Linear enc1_, enc2_, dec1_, dec2_;
  nn::Linear pose_head_;
  nn::Linear velocity_head_;
};

std::unique_ptr<Generator> make_generator(GeneratorKind kind, const ModelConfig& config,
                                          const FeatureNormalizer& normalizer, Rng& rng);

ModelConfig config_from_manifest(const nlohmann::json& manifest);
nlohmann::json model_config_json(const ModelConfig& config);

// Checkpoint holding the generator's parameters under "generator/".
void store_generator(nn::Checkpoint& ckpt, const Generator& generator);
std::unique_ptr<Generator> load_generator(const nn::Checkpoint& ckpt);
std::unique_ptr<Generator> load_generator(const std::filesystem::path& path);

// Retargets a clip frame by frame. Each input frame is consumed once and the
// output frame is emitted before the next one is read; recurrent state is
// carried as plain tensors, so memory does not grow with the clip.
class StreamingRetargeter {
 public:
  StreamingRetargeter(const Generator& generator, const Skeleton& input_skeleton,
                      const Skeleton& target);

  // Returns the next output frame: local pose (cm, root-relative) and root motion.
  std::pair<Pose, GlobalMotion> push(const MotionClip& input, std::size_t frame);
  // Unit quaternions of the most recent frame (kinematic generator only).
  const Rotations& last_rotations() const { return rotations_; }

 private:
  const Generator& generator_;
  Skeleton input_skeleton_;
  Skeleton target_;
  Skeleton normalized_target_;
  std::vector<nn::Tensor> encoder_;
  std::vector<nn::Tensor> decoder_;
  nn::Tensor previous_;
  Rotations rotations_;
  bool started_ = false;
};

// Retargets a whole clip onto `target`. The output starts from the input's
// start state mapped onto the target (see transfer_start_position).
MotionClip retarget(const Generator& generator, const MotionClip& input, const Skeleton& target);

// Root start position on `target` for a clip that started at `start` on
// `source`: the T-pose root plus the displacement scaled by the height ratio.
Vec3 transfer_start_position(const Vec3& start, const Skeleton& source, const Skeleton& target);

}  // namespace kinnet
