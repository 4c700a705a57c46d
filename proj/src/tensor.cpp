// SPDX-License-Identifier: Apache-2.0
#include "hamwave/tensor.hpp"

#include <cmath>
#include <cstddef>

#include "hamwave/error.hpp"

namespace hamwave {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) fail_invalid("tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

void check_finite(const std::vector<double>& data) {
  for (double v : data)
    if (!std::isfinite(v)) fail_numeric("tensor: non-finite value in input data");
}

}  // namespace

Tensor Tensor::scalar(double v) {
  if (!std::isfinite(v)) fail_numeric("tensor: non-finite scalar");
  return Tensor({}, {v});
}

Tensor Tensor::vector(std::vector<double> v) {
  check_finite(v);
  int n = static_cast<int>(v.size());
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> v) {
  if (v.size() != shape_product({rows, cols}))
    fail_invalid("tensor: matrix data size does not match " + std::to_string(rows) + "x" +
                 std::to_string(cols));
  check_finite(v);
  return Tensor({rows, cols}, std::move(v));
}

Tensor Tensor::zeros(std::vector<int> shape) {
  std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::ones(std::vector<int> shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  if (!std::isfinite(v)) fail_numeric("tensor: non-finite fill value");
  std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::raw(std::vector<int> shape, std::vector<double> data) {
  if (data.size() != shape_product(shape)) fail_invalid("tensor: data size does not match shape");
  return Tensor(std::move(shape), std::move(data));
}

double Tensor::scalar_value() const {
  if (!is_scalar()) fail_invalid("tensor: scalar_value on non-scalar of shape " + shape_str());
  return data_[0];
}

int Tensor::rows() const {
  if (rank() != 2) fail_invalid("tensor: rows() on rank-" + std::to_string(rank()));
  return shape_[0];
}

int Tensor::cols() const {
  if (rank() != 2) fail_invalid("tensor: cols() on rank-" + std::to_string(rank()));
  return shape_[1];
}

int Tensor::length() const {
  if (rank() != 1) fail_invalid("tensor: length() on rank-" + std::to_string(rank()));
  return shape_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

}  // namespace hamwave
