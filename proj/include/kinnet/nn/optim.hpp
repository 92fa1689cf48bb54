#pragma once

#include "kinnet/nn/tape.hpp"

#include <map>
#include <string>

namespace kinnet::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update from the gradients stored in `params`.
  // Throws NumericError naming the parameter when a gradient is not finite.
  void step(ParameterSet& params);

  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

  struct Moments {
    Tensor m;
    Tensor v;
  };
  const std::map<std::string, Moments>& state() const { return state_; }
  void set_state(long steps, std::map<std::string, Moments> state);

 private:
  AdamConfig config_;
  long t_ = 0;
  std::map<std::string, Moments> state_;
};

// Joint L2 norm of all gradients in the set.
double global_grad_norm(const ParameterSet& params);

// Rescales every gradient by max_norm / norm when the joint norm exceeds
// max_norm. Returns the norm before clipping. Throws NumericError when it is
// not finite.
double clip_global_norm(ParameterSet& params, double max_norm);

}  // namespace kinnet::nn
