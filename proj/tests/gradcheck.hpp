#pragma once

#include "kinnet/nn/ops.hpp"
#include "kinnet/nn/tape.hpp"
#include "kinnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace kinnet::testing {

using Builder = std::function<nn::Var(nn::Tape&, const std::vector<nn::Var>&)>;

inline nn::Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
  nn::Tensor t(std::move(shape));
  for (double& v : t.values()) {
    v = scale * gaussian(rng);
  }
  return t;
}

// Largest relative error between the tape gradient of <build(inputs), weights>
// and central differences with step h, over every input entry.
inline double gradcheck(const Builder& build, std::vector<nn::Tensor> inputs, Rng& rng,
                        double h = 1e-5) {
  nn::Tensor weights;
  auto evaluate = [&](const std::vector<nn::Tensor>& xs) {
    nn::Tape tape;
    std::vector<nn::Var> vars;
    for (const auto& x : xs) {
      vars.push_back(tape.constant(x));
    }
    const nn::Var out = build(tape, vars);
    double s = 0.0;
    for (std::size_t i = 0; i < out.value().size(); ++i) {
      s += out.value()[i] * weights[i];
    }
    return s;
  };

  nn::Tape tape;
  std::vector<nn::Var> vars;
  for (const auto& x : inputs) {
    vars.push_back(tape.input(x));
  }
  const nn::Var out = build(tape, vars);
  weights = random_tensor(rng, out.shape());
  const nn::Var loss = nn::sum(nn::mul(out, tape.constant(weights)));
  tape.backward(loss);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const nn::Tensor& analytic = tape.grad(vars[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs;
      auto minus = inputs;
      plus[k][i] += h;
      minus[k][i] -= h;
      const double numeric = (evaluate(plus) - evaluate(minus)) / (2.0 * h);
      const double err = std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace kinnet::testing
