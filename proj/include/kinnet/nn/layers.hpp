#pragma once

#include "kinnet/nn/ops.hpp"
#include "kinnet/nn/tape.hpp"
#include "kinnet/rng.hpp"

#include <string>
#include <vector>

namespace kinnet::nn {

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) entries.
Tensor uniform_fan_in(Rng& rng, std::vector<int> shape, int fan_in);
// rows x cols matrix with orthonormal columns (or rows when rows < cols).
Tensor orthogonal(Rng& rng, int rows, int cols);

// y = x W + b
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, int in, int out, Rng& rng);

  Var operator()(Tape& tape, Var x) const;
  int in() const { return in_; }
  int out() const { return out_; }
  Parameter& weight() const { return *w_; }
  Parameter& bias() const { return *b_; }

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
  int in_ = 0;
  int out_ = 0;
};

class GruLayer {
 public:
  GruLayer() = default;
  GruLayer(ParameterSet& params, const std::string& name, int in, int hidden, Rng& rng,
           GruVariant variant);

  Var step(Tape& tape, Var x, Var h) const;
  int hidden() const { return hidden_; }

 private:
  Parameter* wx_ = nullptr;
  Parameter* wh_ = nullptr;
  Parameter* bx_ = nullptr;
  Parameter* bh_ = nullptr;
  int hidden_ = 0;
  GruVariant variant_ = GruVariant::kResetBeforeMatmul;
};

// Stacked GRU; layer l > 0 consumes the new state of layer l - 1.
class GruStack {
 public:
  GruStack() = default;
  GruStack(ParameterSet& params, const std::string& name, int in, int hidden, int layers,
           Rng& rng, GruVariant variant = GruVariant::kResetBeforeMatmul);

  // Zero state for a batch.
  std::vector<Var> initial_state(Tape& tape, int batch) const;
  // Advances every layer in place and returns the top layer's state.
  Var step(Tape& tape, Var x, std::vector<Var>& state) const;

  int hidden() const { return hidden_; }
  int layers() const { return static_cast<int>(cells_.size()); }

 private:
  std::vector<GruLayer> cells_;
  int hidden_ = 0;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParameterSet& params, const std::string& name, int in, int out, int kernel, int stride,
         Padding padding, Rng& rng);

  Var operator()(Tape& tape, Var x) const;

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
  int stride_ = 1;
  Padding padding_ = Padding::kSame;
};

}  // namespace kinnet::nn
