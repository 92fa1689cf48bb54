#include "kinnet/nn/optim.hpp"

#include "kinnet/errors.hpp"

#include <cmath>

namespace kinnet::nn {

void Adam::step(ParameterSet& params) {
  for (const Parameter* p : params.all()) {
    if (p->grad.size() != p->value.size()) {
      throw ShapeError("gradient of '" + p->name + "' has shape " + p->grad.shape_string());
    }
    if (!p->grad.all_finite()) {
      throw NumericError("non-finite gradient for parameter '" + p->name + "'");
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (Parameter* p : params.all()) {
    auto [it, inserted] = state_.try_emplace(p->name);
    Moments& mom = it->second;
    if (inserted || mom.m.size() != p->value.size()) {
      mom.m = Tensor(p->value.shape());
      mom.v = Tensor(p->value.shape());
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * g;
      mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = mom.m[i] / c1;
      const double v_hat = mom.v[i] / c2;
      p->value[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void Adam::set_state(long steps, std::map<std::string, Moments> state) {
  t_ = steps;
  state_ = std::move(state);
}

double global_grad_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (const Parameter* p : params.all()) {
    for (double g : p->grad.values()) {
      sq += g * g;
    }
  }
  return std::sqrt(sq);
}

double clip_global_norm(ParameterSet& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) {
    throw NumericError("non-finite gradient norm");
  }
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params.all()) {
      for (double& g : p->grad.values()) {
        g *= s;
      }
    }
  }
  return norm;
}

}  // namespace kinnet::nn
