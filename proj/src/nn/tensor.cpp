#include "kinnet/nn/tensor.hpp"

#include "kinnet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kinnet::nn {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) {
      throw ShapeError("negative dimension in shape " + nn::shape_string(shape));
    }
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    s += (i ? ", " : "") + std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw ShapeError("shape " + nn::shape_string(shape_) + " does not match " +
                     std::to_string(values_.size()) + " values");
  }
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + nn::shape_string(shape_));
  }
  return values_[0];
}

MatrixMap Tensor::matrix() {
  if (rank() == 1) {
    return MatrixMap(values_.data(), 1, shape_[0]);
  }
  if (rank() != 2) {
    throw ShapeError("matrix view of rank-" + std::to_string(rank()) + " tensor");
  }
  return MatrixMap(values_.data(), shape_[0], shape_[1]);
}

ConstMatrixMap Tensor::matrix() const {
  if (rank() == 1) {
    return ConstMatrixMap(values_.data(), 1, shape_[0]);
  }
  if (rank() != 2) {
    throw ShapeError("matrix view of rank-" + std::to_string(rank()) + " tensor");
  }
  return ConstMatrixMap(values_.data(), shape_[0], shape_[1]);
}

void Tensor::fill(double v) {
  std::fill(values_.begin(), values_.end(), v);
}

void Tensor::reshape(std::vector<int> shape) {
  if (shape_size(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + nn::shape_string(shape_) + " to " + nn::shape_string(shape));
  }
  shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  return nn::shape_string(shape_);
}

}  // namespace kinnet::nn
