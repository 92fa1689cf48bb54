#include "kinnet/discriminator.hpp"

#include "kinnet/errors.hpp"

namespace kinnet {

DiscriminatorConfig DiscriminatorConfig::paper() {
  return DiscriminatorConfig{};
}

DiscriminatorConfig DiscriminatorConfig::desk() {
  DiscriminatorConfig c;
  c.widths = {32, 64, 64, 64};
  return c;
}

nlohmann::json DiscriminatorConfig::to_json() const {
  return {{"joints", joints}, {"widths", widths}, {"keep", keep}, {"leak", leak}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.joints = j.at("joints").get<int>();
  c.widths = j.at("widths").get<std::array<int, 4>>();
  c.keep = j.value("keep", c.keep);
  c.leak = j.value("leak", c.leak);
  return c;
}

Discriminator::Discriminator(DiscriminatorConfig config, Rng& rng) : config_(config) {
  int in = config_.input_channels();
  for (int l = 0; l < 4; ++l) {
    convs_[l] = nn::Conv1d(params_, "conv" + std::to_string(l + 1), in, config_.widths[l], 4, 2,
                           nn::Padding::kSame, rng);
    in = config_.widths[l];
  }
  convs_[4] = nn::Conv1d(params_, "conv5", in, 1, 4, 1, nn::Padding::kValid, rng);
  for (int l = 0; l < 3; ++l) {
    const int width = config_.widths[l + 1];
    gamma_[l] = &params_.add("norm" + std::to_string(l + 2) + ".gamma", nn::Tensor({width}, 1.0));
    beta_[l] = &params_.add("norm" + std::to_string(l + 2) + ".beta", nn::Tensor({width}));
  }
}

nn::Var discriminator_input(const std::vector<nn::Var>& poses,
                            const std::vector<nn::Var>& velocities, nn::Var skeleton) {
  if (poses.size() != velocities.size() || poses.size() < 2) {
    throw ShapeError("discriminator needs matching pose/velocity sequences of length >= 2");
  }
  std::vector<nn::Var> frames;
  frames.reserve(poses.size() - 1);
  for (std::size_t t = 0; t + 1 < poses.size(); ++t) {
    frames.push_back(
        nn::concat({nn::sub(poses[t + 1], poses[t]), velocities[t], skeleton}));
  }
  return nn::stack_time(frames);
}

nn::Var Discriminator::score(nn::Tape& tape, nn::Var x) const {
  if (x.value().rank() != 3 || x.dim(1) != config_.input_channels()) {
    throw ShapeError("discriminator input must be [B, " +
                     std::to_string(config_.input_channels()) + ", L], got " +
                     nn::shape_string(x.shape()));
  }
  if (x.dim(2) < kMinDiscriminatorLength) {
    throw ShapeError("discriminator needs at least " + std::to_string(kMinDiscriminatorLength) +
                     " difference frames, got " + std::to_string(x.dim(2)));
  }
  nn::Var h = x;
  for (int l = 0; l < 4; ++l) {
    h = convs_[l](tape, h);
    if (l > 0) {
      h = nn::channel_affine(nn::instance_norm_1d(h), tape.param(*gamma_[l - 1]),
                             tape.param(*beta_[l - 1]));
    }
    h = nn::dropout(nn::leaky_relu(h, config_.leak), config_.keep);
  }
  h = convs_[4](tape, h);  // [B, 1, L']
  const int batch = h.dim(0);
  const int len = h.dim(2);
  const nn::Var logits = nn::mean_last(nn::reshape(h, {batch, len}));
  return nn::sigmoid(logits);
}

nn::Var Discriminator::operator()(nn::Tape& tape, const std::vector<nn::Var>& poses,
                                  const std::vector<nn::Var>& velocities,
                                  nn::Var skeleton) const {
  return score(tape, discriminator_input(poses, velocities, skeleton));
}

}  // namespace kinnet
