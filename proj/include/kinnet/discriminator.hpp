#pragma once

#include "kinnet/nn/layers.hpp"

#include <array>
#include <json.hpp>
#include <vector>

namespace kinnet {

struct DiscriminatorConfig {
  int joints = 22;
  // Output channels of layers 1-4; layer 5 emits one channel.
  std::array<int, 4> widths{64, 128, 256, 512};
  double keep = 0.7;
  double leak = nn::kLeakyReluSlope;

  static DiscriminatorConfig paper();
  static DiscriminatorConfig desk();

  int input_channels() const { return 3 * joints + 4 + 3 * (joints - 1); }
  nlohmann::json to_json() const;
  static DiscriminatorConfig from_json(const nlohmann::json& j);
};

// Shortest difference sequence the conv stack accepts (four stride-2 "same"
// layers followed by a "valid" kernel of 4).
inline constexpr int kMinDiscriminatorLength = 49;

// Five 1-D convolutions with kernel 4. Layers 1-4: stride 2, "same", leaky
// ReLU and dropout, layers 2-4 instance-normalized with a learned affine.
// Layer 5: "valid", linear. Logits are averaged over the remaining time steps
// and squashed to a realism probability per sequence.
class Discriminator {
 public:
  Discriminator(DiscriminatorConfig config, Rng& rng);

  // poses[t] [B, 3N] local positions, velocities[t] [B, 4], skeleton [B, 3(N-1)].
  // Uses pose differences p_{t+1} - p_t with velocities v_t for t < T.
  nn::Var operator()(nn::Tape& tape, const std::vector<nn::Var>& poses,
                     const std::vector<nn::Var>& velocities, nn::Var skeleton) const;
  // Channels-first input [B, C, T - 1] already assembled.
  nn::Var score(nn::Tape& tape, nn::Var input) const;

  const DiscriminatorConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

 private:
  DiscriminatorConfig config_;
  nn::ParameterSet params_;
  std::array<nn::Conv1d, 5> convs_;
  std::array<nn::Parameter*, 3> gamma_{};
  std::array<nn::Parameter*, 3> beta_{};
};

// Assembles the discriminator input [B, C, T - 1].
nn::Var discriminator_input(const std::vector<nn::Var>& poses,
                            const std::vector<nn::Var>& velocities, nn::Var skeleton);

}  // namespace kinnet
