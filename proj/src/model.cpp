#include "kinnet/model.hpp"

#include "kinnet/errors.hpp"

#include <cmath>

namespace kinnet {

using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

constexpr double kMinVelocityStd = 1e-4;

const char* composition_name(Composition c) {
  return c == Composition::kHierarchical ? "hierarchical" : "world";
}

const char* variant_name(nn::GruVariant v) {
  return v == nn::GruVariant::kResetBeforeMatmul ? "reset-before-matmul" : "reset-after-matmul";
}

}  // namespace

const char* generator_kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kKinematic:
      return "kinematic";
    case GeneratorKind::kRnn:
      return "rnn";
    case GeneratorKind::kMlp:
      return "mlp";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "kinematic") return GeneratorKind::kKinematic;
  if (name == "rnn") return GeneratorKind::kRnn;
  if (name == "mlp") return GeneratorKind::kMlp;
  throw Error("unknown model kind '" + name + "'");
}

ModelConfig ModelConfig::paper() {
  return ModelConfig{};
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.hidden = 64;
  c.mlp_width = 128;
  return c;
}

FeatureNormalizer FeatureNormalizer::fit(const std::vector<const MotionClip*>& clips) {
  FeatureNormalizer n;
  std::array<double, 4> sum{}, sq{};
  double count = 0.0;
  for (const MotionClip* clip : clips) {
    const double h = clip->skeleton.height();
    for (const GlobalMotion& g : clip->global) {
      const std::array<double, 4> v{g.velocity.x() / h, g.velocity.y() / h, g.velocity.z() / h,
                                    g.dyaw};
      for (int c = 0; c < 4; ++c) {
        sum[c] += v[c];
        sq[c] += v[c] * v[c];
      }
      count += 1.0;
    }
  }
  if (count == 0.0) {
    throw Error("cannot fit feature statistics on an empty clip set");
  }
  for (int c = 0; c < 4; ++c) {
    const double mean = sum[c] / count;
    const double var = std::max(sq[c] / count - mean * mean, 0.0);
    n.velocity_mean[c] = mean;
    n.velocity_std[c] = std::max(std::sqrt(var), kMinVelocityStd);
  }
  return n;
}

std::array<double, 4> FeatureNormalizer::encode_velocity(const GlobalMotion& g,
                                                         double height) const {
  const std::array<double, 4> raw{g.velocity.x() / height, g.velocity.y() / height,
                                  g.velocity.z() / height, g.dyaw};
  std::array<double, 4> out{};
  for (int c = 0; c < 4; ++c) {
    out[c] = (raw[c] - velocity_mean[c]) / velocity_std[c];
  }
  return out;
}

GlobalMotion FeatureNormalizer::decode_velocity(const double* f, double height) const {
  GlobalMotion g;
  for (int c = 0; c < 3; ++c) {
    g.velocity[c] = (f[c] * velocity_std[c] + velocity_mean[c]) * height;
  }
  g.dyaw = f[3] * velocity_std[3] + velocity_mean[3];
  return g;
}

std::vector<double> FeatureNormalizer::encode(const MotionClip& clip, std::size_t frame) const {
  const double h = clip.skeleton.height();
  std::vector<double> x;
  x.reserve(3 * clip.skeleton.size() + 4);
  for (const Vec3& p : clip.local[frame]) {
    x.push_back(p.x() / h);
    x.push_back(p.y() / h);
    x.push_back(p.z() / h);
  }
  for (double v : encode_velocity(clip.global[frame], h)) {
    x.push_back(v);
  }
  return x;
}

nlohmann::json FeatureNormalizer::to_json() const {
  return {{"velocity_mean", velocity_mean}, {"velocity_std", velocity_std}};
}

FeatureNormalizer FeatureNormalizer::from_json(const nlohmann::json& j) {
  FeatureNormalizer n;
  n.velocity_mean = j.at("velocity_mean").get<std::array<double, 4>>();
  n.velocity_std = j.at("velocity_std").get<std::array<double, 4>>();
  for (double s : n.velocity_std) {
    if (!(s > 0.0)) {
      throw FormatError("velocity standard deviations must be positive");
    }
  }
  return n;
}

std::vector<Tensor> batch_features(const std::vector<const MotionClip*>& clips,
                                   const std::vector<std::size_t>& begin, std::size_t length,
                                   const FeatureNormalizer& normalizer) {
  if (clips.empty() || clips.size() != begin.size()) {
    throw Error("batch_features needs one start frame per clip");
  }
  const int batch = static_cast<int>(clips.size());
  const int width = static_cast<int>(3 * clips[0]->skeleton.size() + 4);
  std::vector<Tensor> out(length, Tensor({batch, width}));
  for (int b = 0; b < batch; ++b) {
    const MotionClip& clip = *clips[b];
    if (static_cast<int>(3 * clip.skeleton.size() + 4) != width) {
      throw ShapeError("clips in a batch must share the joint count");
    }
    if (begin[b] + length > clip.length()) {
      throw Error("batch window runs past the end of clip '" + clip.info.motion + "'");
    }
    for (std::size_t t = 0; t < length; ++t) {
      const auto x = normalizer.encode(clip, begin[b] + t);
      std::copy(x.begin(), x.end(), out[t].data() + static_cast<std::size_t>(b) * width);
    }
  }
  return out;
}

Skeleton normalized_skeleton(const Skeleton& skeleton) {
  return skeleton.scaled(1.0 / skeleton.height());
}

Tensor skeleton_features(const std::vector<const Skeleton*>& normalized) {
  if (normalized.empty()) {
    throw Error("no skeletons");
  }
  const int width = static_cast<int>(3 * (normalized[0]->size() - 1));
  Tensor t({static_cast<int>(normalized.size()), width});
  for (std::size_t b = 0; b < normalized.size(); ++b) {
    const auto f = normalized[b]->bone_features(1.0);
    if (static_cast<int>(f.size()) != width) {
      throw ShapeError("skeletons in a batch must share the joint count");
    }
    std::copy(f.begin(), f.end(), t.data() + b * width);
  }
  return t;
}

Generator::Generator(GeneratorKind kind, ModelConfig config, FeatureNormalizer normalizer)
    : kind_(kind), config_(config), normalizer_(normalizer) {
  if (config_.joints < 2 || config_.hidden < 1 || config_.layers < 1 || config_.mlp_width < 1) {
    throw Error("invalid model configuration");
  }
}

void Generator::check_input(Var input) const {
  if (input.value().rank() != 2 || input.dim(1) != config_.frame_width()) {
    throw ShapeError("input frame must be [B, " + std::to_string(config_.frame_width()) +
                     "], got " + nn::shape_string(input.shape()));
  }
}

StreamState Generator::begin(Tape& tape, const std::vector<const Skeleton*>& targets) const {
  const int batch = static_cast<int>(targets.size());
  const int n = config_.joints;
  for (const Skeleton* s : targets) {
    if (static_cast<int>(s->size()) != n) {
      throw Error("joint/rotation arity mismatch");
    }
  }
  StreamState state;
  state.targets = targets;
  state.skeleton = tape.constant(skeleton_features(targets));
  Tensor seed({batch, config_.frame_width()});
  for (int b = 0; b < batch; ++b) {
    const auto& tpose = targets[b]->local_tpose();
    for (int j = 0; j < n; ++j) {
      for (int c = 0; c < 3; ++c) {
        seed[static_cast<std::size_t>(b) * config_.frame_width() + 3 * j + c] = tpose[j][c];
      }
    }
  }
  state.previous = tape.constant(std::move(seed));
  for (int l = 0; l < config_.layers; ++l) {
    state.encoder.push_back(tape.constant(Tensor({batch, config_.hidden})));
    state.decoder.push_back(tape.constant(Tensor({batch, config_.hidden})));
  }
  return state;
}

SequenceOutput Generator::run(Tape& tape, const std::vector<Var>& inputs,
                              const std::vector<const Skeleton*>& targets) const {
  if (inputs.size() < 2) {
    throw Error("synthesis needs at least 2 frames");
  }
  StreamState state = begin(tape, targets);
  SequenceOutput out;
  out.frames.reserve(inputs.size());
  for (const Var& x : inputs) {
    out.frames.push_back(step(tape, state, x));
  }
  return out;
}

nlohmann::json Generator::manifest() const {
  nlohmann::json names = nlohmann::json::array();
  for (auto n : kCanonicalJointNames) {
    names.push_back(std::string(n));
  }
  if (config_.joints != static_cast<int>(kCanonicalJointCount)) {
    names = nlohmann::json::array();
  }
  return {{"model", generator_kind_name(kind_)},
          {"joints", config_.joints},
          {"joint_names", names},
          {"hidden", config_.hidden},
          {"layers", config_.layers},
          {"mlp_width", config_.mlp_width},
          {"gru_variant", variant_name(config_.gru_variant)},
          {"composition", composition_name(config_.composition)},
          {"normalizer", normalizer_.to_json()}};
}

KinematicNetwork::KinematicNetwork(ModelConfig config, FeatureNormalizer normalizer, Rng& rng)
    : Generator(GeneratorKind::kKinematic, config, normalizer) {
  const int n = config_.joints;
  const int h = config_.hidden;
  encoder_ = nn::GruStack(params_, "encoder", config_.frame_width(), h, config_.layers, rng,
                          config_.gru_variant);
  decoder_ = nn::GruStack(params_, "decoder",
                          config_.frame_width() + h + config_.skeleton_width(), h,
                          config_.layers, rng, config_.gru_variant);
  quat_head_ = nn::Linear(params_, "quat_head", h, 4 * n, rng);
  velocity_head_ = nn::Linear(params_, "velocity_head", h, 4, rng);
  // Identity rotations at initialization: zero weights, bias (1, 0, 0, 0).
  quat_head_.weight().value.fill(0.0);
  for (int j = 0; j < n; ++j) {
    quat_head_.bias().value[4 * j] = 1.0;
  }
}

Var KinematicNetwork::encode_step(Tape& tape, Var input, std::vector<Var>& encoder) const {
  check_input(input);
  return encoder_.step(tape, input, encoder);
}

FrameOutput KinematicNetwork::decode_step(Tape& tape, Var previous, Var encoded, Var skeleton,
                                          const std::vector<const Skeleton*>& targets,
                                          std::vector<Var>& decoder) const {
  const Var h = decoder_.step(tape, nn::concat({previous, encoded, skeleton}), decoder);
  FrameOutput out;
  out.quats = nn::normalize_quaternions(quat_head_(tape, h));
  out.velocity = velocity_head_(tape, h);
  out.pose = nn::forward_kinematics(out.quats, targets, config_.composition);
  out.frame = nn::concat({out.pose, out.velocity});
  return out;
}

FrameOutput KinematicNetwork::step(Tape& tape, StreamState& state, Var input) const {
  const Var encoded = encode_step(tape, input, state.encoder);
  FrameOutput out =
      decode_step(tape, state.previous, encoded, state.skeleton, state.targets, state.decoder);
  state.previous = out.frame;
  return out;
}

ConditionalRnn::ConditionalRnn(ModelConfig config, FeatureNormalizer normalizer, Rng& rng)
    : Generator(GeneratorKind::kRnn, config, normalizer) {
  const int h = config_.hidden;
  encoder_ = nn::GruStack(params_, "encoder", config_.frame_width(), h, config_.layers, rng,
                          config_.gru_variant);
  decoder_ = nn::GruStack(params_, "decoder",
                          config_.frame_width() + h + config_.skeleton_width(), h,
                          config_.layers, rng, config_.gru_variant);
  pose_head_ = nn::Linear(params_, "pose_head", h, 3 * config_.joints, rng);
  velocity_head_ = nn::Linear(params_, "velocity_head", h, 4, rng);
}

FrameOutput ConditionalRnn::step(Tape& tape, StreamState& state, Var input) const {
  check_input(input);
  const Var encoded = encoder_.step(tape, input, state.encoder);
  const Var h =
      decoder_.step(tape, nn::concat({state.previous, encoded, state.skeleton}), state.decoder);
  FrameOutput out;
  out.pose = pose_head_(tape, h);
  out.velocity = velocity_head_(tape, h);
  out.frame = nn::concat({out.pose, out.velocity});
  state.previous = out.frame;
  return out;
}

ConditionalMlp::ConditionalMlp(ModelConfig config, FeatureNormalizer normalizer, Rng& rng)
    : Generator(GeneratorKind::kMlp, config, normalizer) {
  const int w = config_.mlp_width;
  enc1_ = nn::Linear(params_, "enc1", config_.frame_width(), w, rng);
  enc2_ = nn::Linear(params_, "enc2", w, w, rng);
  dec1_ = nn::Linear(params_, "dec1", w + config_.skeleton_width(), w, rng);
  dec2_ = nn::Linear(params_, "dec2", w, w, rng);
  pose_head_ = nn::Linear(params_, "pose_head", w, 3 * config_.joints, rng);
  velocity_head_ = nn::Linear(params_, "velocity_head", w, 4, rng);
}

FrameOutput ConditionalMlp::step(Tape& tape, StreamState& state, Var input) const {
  check_input(input);
  const Var e = nn::relu(enc2_(tape, nn::relu(enc1_(tape, input))));
  const Var d = nn::relu(
      dec2_(tape, nn::relu(dec1_(tape, nn::concat({e, state.skeleton})))));
  FrameOutput out;
  out.pose = pose_head_(tape, d);
  out.velocity = velocity_head_(tape, d);
  out.frame = nn::concat({out.pose, out.velocity});
  state.previous = out.frame;
  return out;
}

std::unique_ptr<Generator> make_generator(GeneratorKind kind, const ModelConfig& config,
                                          const FeatureNormalizer& normalizer, Rng& rng) {
  switch (kind) {
    case GeneratorKind::kKinematic:
      return std::make_unique<KinematicNetwork>(config, normalizer, rng);
    case GeneratorKind::kRnn:
      return std::make_unique<ConditionalRnn>(config, normalizer, rng);
    case GeneratorKind::kMlp:
      return std::make_unique<ConditionalMlp>(config, normalizer, rng);
  }
  throw Error("unknown generator kind");
}

ModelConfig config_from_manifest(const nlohmann::json& m) {
  ModelConfig c;
  c.joints = m.at("joints").get<int>();
  c.hidden = m.at("hidden").get<int>();
  c.layers = m.at("layers").get<int>();
  c.mlp_width = m.value("mlp_width", c.mlp_width);
  const std::string variant = m.value("gru_variant", "reset-before-matmul");
  if (variant == "reset-before-matmul") {
    c.gru_variant = nn::GruVariant::kResetBeforeMatmul;
  } else if (variant == "reset-after-matmul") {
    c.gru_variant = nn::GruVariant::kResetAfterMatmul;
  } else {
    throw FormatError("unknown GRU variant '" + variant + "'");
  }
  const std::string comp = m.value("composition", "hierarchical");
  if (comp == "hierarchical") {
    c.composition = Composition::kHierarchical;
  } else if (comp == "world") {
    c.composition = Composition::kWorld;
  } else {
    throw FormatError("unknown composition '" + comp + "'");
  }
  return c;
}

nlohmann::json model_config_json(const ModelConfig& c) {
  return {{"joints", c.joints},
          {"hidden", c.hidden},
          {"layers", c.layers},
          {"mlp_width", c.mlp_width},
          {"gru_variant", variant_name(c.gru_variant)},
          {"composition", composition_name(c.composition)}};
}

void store_generator(nn::Checkpoint& ckpt, const Generator& generator) {
  ckpt.manifest["generator"] = generator.manifest();
  nn::store_parameters(ckpt, generator.params(), "generator/");
}

std::unique_ptr<Generator> load_generator(const nn::Checkpoint& ckpt) {
  if (!ckpt.manifest.contains("generator")) {
    throw FormatError("checkpoint has no generator manifest");
  }
  const auto& m = ckpt.manifest["generator"];
  const GeneratorKind kind = parse_generator_kind(m.at("model").get<std::string>());
  Rng unused(0);
  auto gen = make_generator(kind, config_from_manifest(m),
                            FeatureNormalizer::from_json(m.at("normalizer")), unused);
  nn::load_parameters(ckpt, gen->params(), "generator/");
  return gen;
}

std::unique_ptr<Generator> load_generator(const std::filesystem::path& path) {
  return load_generator(nn::load_checkpoint(path));
}

Vec3 transfer_start_position(const Vec3& start, const Skeleton& source, const Skeleton& target) {
  const double ratio = target.height() / source.height();
  return target.root_position() + ratio * (start - source.root_position());
}

StreamingRetargeter::StreamingRetargeter(const Generator& generator,
                                         const Skeleton& input_skeleton, const Skeleton& target)
    : generator_(generator),
      input_skeleton_(input_skeleton),
      target_(target),
      normalized_target_(normalized_skeleton(target)) {
  const auto n = static_cast<std::size_t>(generator.config().joints);
  if (input_skeleton.size() != n || target.size() != n) {
    throw Error("joint/rotation arity mismatch");
  }
}

std::pair<Pose, GlobalMotion> StreamingRetargeter::push(const MotionClip& input,
                                                        std::size_t frame) {
  Tape tape;
  tape.set_grad_enabled(false);
  const std::vector<const Skeleton*> targets{&normalized_target_};
  StreamState state = generator_.begin(tape, targets);
  if (started_) {
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      state.encoder[l] = tape.constant(encoder_[l]);
      state.decoder[l] = tape.constant(decoder_[l]);
    }
    state.previous = tape.constant(previous_);
  }
  const auto x = generator_.normalizer().encode(input, frame);
  const Var in = tape.constant(Tensor({1, static_cast<int>(x.size())}, x));
  const FrameOutput out = generator_.step(tape, state, in);

  encoder_.clear();
  decoder_.clear();
  for (std::size_t l = 0; l < state.encoder.size(); ++l) {
    encoder_.push_back(state.encoder[l].value());
    decoder_.push_back(state.decoder[l].value());
  }
  previous_ = state.previous.value();
  started_ = true;

  const double h = target_.height();
  const auto& p = out.pose.value();
  Pose pose(target_.size());
  for (std::size_t j = 0; j < pose.size(); ++j) {
    pose[j] = Vec3(p[3 * j], p[3 * j + 1], p[3 * j + 2]) * h;
  }
  if (out.quats.id >= 0) {
    const auto& q = out.quats.value();
    rotations_.resize(target_.size());
    for (std::size_t j = 0; j < rotations_.size(); ++j) {
      rotations_[j] = {q[4 * j], q[4 * j + 1], q[4 * j + 2], q[4 * j + 3]};
    }
  }
  return {std::move(pose), generator_.normalizer().decode_velocity(out.velocity.value().data(), h)};
}

MotionClip retarget(const Generator& generator, const MotionClip& input, const Skeleton& target) {
  input.validate();
  StreamingRetargeter stream(generator, input.skeleton, target);
  MotionClip out;
  out.skeleton = target;
  out.fps = input.fps;
  out.start_position = transfer_start_position(input.start_position, input.skeleton, target);
  out.start_yaw = input.start_yaw;
  out.info = input.info;
  out.info.source_character = input.skeleton.name();
  out.info.character = target.name();
  for (std::size_t t = 0; t < input.length(); ++t) {
    auto [pose, motion] = stream.push(input, t);
    // The network's yaw rate is not bounded; keep the clip representable.
    motion.dyaw = std::remainder(motion.dyaw, 360.0);
    out.local.push_back(std::move(pose));
    out.global.push_back(motion);
    if (generator.has_rotations()) {
      out.rotations.push_back(stream.last_rotations());
    }
  }
  return out;
}

}  // namespace kinnet
