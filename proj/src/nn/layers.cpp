#include "kinnet/nn/layers.hpp"

#include "kinnet/errors.hpp"

#include <Eigen/QR>

#include <cmath>

namespace kinnet::nn {

Tensor uniform_fan_in(Rng& rng, std::vector<int> shape, int fan_in) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values()) {
    v = uniform(rng, -bound, bound);
  }
  return t;
}

Tensor orthogonal(Rng& rng, int rows, int cols) {
  const int n = std::max(rows, cols);
  const int m = std::min(rows, cols);
  Eigen::MatrixXd g(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      g(i, j) = gaussian(rng);
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  // Sign fix makes the draw uniform over orthogonal matrices.
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(m, m);
  for (int j = 0; j < m; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) *= -1.0;
    }
  }
  Tensor t({rows, cols});
  if (rows >= cols) {
    t.matrix() = q;
  } else {
    t.matrix() = q.transpose();
  }
  return t;
}

Linear::Linear(ParameterSet& params, const std::string& name, int in, int out, Rng& rng)
    : in_(in), out_(out) {
  w_ = &params.add(name + ".w", uniform_fan_in(rng, {in, out}, in));
  b_ = &params.add(name + ".b", Tensor({out}));
}

Var Linear::operator()(Tape& tape, Var x) const {
  return affine(x, tape.param(*w_), tape.param(*b_));
}

GruLayer::GruLayer(ParameterSet& params, const std::string& name, int in, int hidden, Rng& rng,
                   GruVariant variant)
    : hidden_(hidden), variant_(variant) {
  wx_ = &params.add(name + ".wx", uniform_fan_in(rng, {in, 3 * hidden}, in));
  // One orthogonal block per gate.
  Tensor wh({hidden, 3 * hidden});
  for (int g = 0; g < 3; ++g) {
    wh.matrix().middleCols(g * hidden, hidden) = orthogonal(rng, hidden, hidden).matrix();
  }
  wh_ = &params.add(name + ".wh", std::move(wh));
  bx_ = &params.add(name + ".bx", Tensor({3 * hidden}));
  bh_ = &params.add(name + ".bh", Tensor({3 * hidden}));
}

Var GruLayer::step(Tape& tape, Var x, Var h) const {
  return gru_cell(x, h, tape.param(*wx_), tape.param(*wh_), tape.param(*bx_), tape.param(*bh_),
                  variant_);
}

GruStack::GruStack(ParameterSet& params, const std::string& name, int in, int hidden, int layers,
                   Rng& rng, GruVariant variant)
    : hidden_(hidden) {
  if (layers < 1 || hidden < 1) {
    throw Error("GRU stack needs at least one layer and unit");
  }
  for (int l = 0; l < layers; ++l) {
    cells_.emplace_back(params, name + ".l" + std::to_string(l), l == 0 ? in : hidden, hidden,
                        rng, variant);
  }
}

std::vector<Var> GruStack::initial_state(Tape& tape, int batch) const {
  std::vector<Var> state;
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    state.push_back(tape.constant(Tensor({batch, hidden_})));
  }
  return state;
}

Var GruStack::step(Tape& tape, Var x, std::vector<Var>& state) const {
  if (state.size() != cells_.size()) {
    throw ShapeError("GRU state has " + std::to_string(state.size()) + " layers, stack has " +
                     std::to_string(cells_.size()));
  }
  Var input = x;
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    state[l] = cells_[l].step(tape, input, state[l]);
    input = state[l];
  }
  return input;
}

Conv1d::Conv1d(ParameterSet& params, const std::string& name, int in, int out, int kernel,
               int stride, Padding padding, Rng& rng)
    : stride_(stride), padding_(padding) {
  w_ = &params.add(name + ".w", uniform_fan_in(rng, {out, in, kernel}, in * kernel));
  b_ = &params.add(name + ".b", Tensor({out}));
}

Var Conv1d::operator()(Tape& tape, Var x) const {
  return conv1d(x, tape.param(*w_), tape.param(*b_), stride_, padding_);
}

}  // namespace kinnet::nn
