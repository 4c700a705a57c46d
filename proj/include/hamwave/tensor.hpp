// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hamwave {

/// Dense row-major tensor of doubles, rank 0 (scalar) to 2 (matrix).
///
/// Construction from user data rejects non-finite values; values produced by
/// tape operations are taken as-is (training aborts explicitly on non-finite
/// losses instead).
class Tensor {
public:
  Tensor() = default;

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(int rows, int cols, std::vector<double> v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor ones(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);
  /// Wraps already-computed data without the finiteness check.
  static Tensor raw(std::vector<int> shape, std::vector<double> data);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty() && shape_.empty(); }

  bool is_scalar() const { return shape_.empty() && data_.size() == 1; }
  double scalar_value() const;

  int rows() const;  ///< rank-2 only
  int cols() const;  ///< rank-2 only
  int length() const;  ///< rank-1 only

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> view() const { return {data_.data(), data_.size()}; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

private:
  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {}

  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace hamwave
