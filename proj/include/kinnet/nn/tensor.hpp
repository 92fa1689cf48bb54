#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace kinnet::nn {

using MatrixR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<MatrixR>;
using ConstMatrixMap = Eigen::Map<const MatrixR>;

// Dense row-major array of doubles with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_[axis < 0 ? axis + rank() : axis]; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double item() const;

  // Rank-2 views; rank-1 tensors are treated as a single row.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;

  void fill(double v);
  void reshape(std::vector<int> shape);
  bool all_finite() const;
  std::string shape_string() const;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

std::string shape_string(const std::vector<int>& shape);
std::size_t shape_size(const std::vector<int>& shape);

}  // namespace kinnet::nn
