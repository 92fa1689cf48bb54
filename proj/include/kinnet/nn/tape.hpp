#pragma once

#include "kinnet/nn/tensor.hpp"
#include "kinnet/rng.hpp"

#include <functional>
#include <unordered_map>
#include <memory>
#include <string>
#include <vector>

namespace kinnet::nn {

// A trainable array. Gradients from Tape::backward accumulate into `grad`.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad = Tensor(value.shape()); }
};

// Owns parameters with stable addresses, in registration order.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  Parameter* find(const std::string& name);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t value_count() const;

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  const std::vector<int>& shape() const { return value().shape(); }
  int dim(int axis) const { return value().dim(axis); }
};

// Records primitive operations in execution order for one reverse pass.
// Inputs, constants and parameters are leaves. backward() may run once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  explicit Tape(bool training = false, Rng* rng = nullptr) : training_(training), rng_(rng) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf whose gradient is kept on the tape (read it with grad()).
  Var input(Tensor value);
  // Leaf bound to a parameter; backward() adds into parameter.grad. Repeated
  // calls for the same parameter return the same node. With gradients
  // disabled the leaf is a constant.
  Var param(Parameter& parameter);

  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

  // Seeds d(loss)/d(loss) = 1 on a single-element tensor and propagates.
  void backward(Var loss);
  void reset();

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& grad(Var v) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  bool training() const { return training_; }
  Rng& rng();

  // Used by primitives: records a node; `backward` runs only if some input
  // requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);
  // Gradient buffer of node `id`, allocated on first use; nullptr if the node
  // does not require a gradient.
  Tensor* grad_buffer(int id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool training_ = false;
  bool used_ = false;
  bool grad_enabled_ = true;
  Rng* rng_ = nullptr;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

}  // namespace kinnet::nn
