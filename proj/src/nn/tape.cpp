#include "kinnet/nn/tape.hpp"

#include "kinnet/errors.hpp"

namespace kinnet::nn {

Parameter& ParameterSet::add(std::string name, Tensor init) {
  if (find(name) != nullptr) {
    throw Error("duplicate parameter '" + name + "'");
  }
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = std::move(init);
  p->zero_grad();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) {
      return p.get();
    }
  }
  return nullptr;
}

Parameter& ParameterSet::get(const std::string& name) {
  if (Parameter* p = find(name)) {
    return *p;
  }
  throw Error("unknown parameter '" + name + "'");
}

const Parameter& ParameterSet::get(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    out.push_back(p.get());
  }
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) {
    out.push_back(p.get());
  }
  return out;
}

std::size_t ParameterSet::value_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    n += p->value.size();
  }
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) {
    p->zero_grad();
  }
}

const Tensor& Var::value() const {
  return tape->value(id);
}

Var Tape::push(Node node) {
  if (used_) {
    throw Error("tape already ran backward; call reset() before recording");
  }
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(Parameter& parameter) {
  if (auto it = param_nodes_.find(&parameter); it != param_nodes_.end()) {
    return {this, it->second};
  }
  Node n;
  n.value = parameter.value;
  n.requires_grad = grad_enabled_;
  n.param = grad_enabled_ ? &parameter : nullptr;
  const Var v = push(std::move(n));
  param_nodes_.emplace(&parameter, v.id);
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape != this) {
      throw Error("operation mixes values from different tapes");
    }
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) {
    n.backward = std::move(backward);
  }
  return push(std::move(n));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape != this) {
      throw Error("operation mixes values from different tapes");
    }
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) {
    n.backward = std::move(backward);
  }
  return push(std::move(n));
}

Tensor* Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) {
    return nullptr;
  }
  if (n.grad.size() != n.value.size()) {
    n.grad = Tensor(n.value.shape());
  }
  return &n.grad;
}

const Tensor& Tape::grad(Var v) const {
  static const Tensor kEmpty;
  const Node& n = nodes_[v.id];
  return n.grad.size() == n.value.size() ? n.grad : kEmpty;
}

void Tape::backward(Var loss) {
  if (used_) {
    throw Error("backward called twice on the same tape");
  }
  if (loss.tape != this) {
    throw Error("loss belongs to a different tape");
  }
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("backward needs a single-element loss, got " +
                     nodes_[loss.id].value.shape_string());
  }
  used_ = true;
  if (Tensor* g = grad_buffer(loss.id)) {
    (*g)[0] = 1.0;
  } else {
    return;
  }
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() != n.value.size()) {
      continue;
    }
    if (n.backward) {
      // Closures only touch their inputs' buffers, never this node's.
      n.backward(*this, n.grad);
    }
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.size() != p.value.size()) {
        p.zero_grad();
      }
      for (std::size_t i = 0; i < p.grad.size(); ++i) {
        p.grad[i] += n.grad[i];
      }
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  param_nodes_.clear();
  used_ = false;
}

Rng& Tape::rng() {
  if (rng_ == nullptr) {
    throw Error("tape has no random generator (needed for dropout in training mode)");
  }
  return *rng_;
}

}  // namespace kinnet::nn
