// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "rsqa/error.hpp"

namespace rsqa::nn {

using Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense row-major array with an optional gradient buffer of the same shape.
template <typename Scalar>
class Tensor {
 public:
  using Shape = std::vector<Index>;

  Tensor() = default;
  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(Vector<Scalar>::Zero(count(shape_))) {}
  Tensor(Shape shape, Vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_))
      throw Error(ErrorKind::kShape, "tensor data length does not match shape");
  }

  const Shape& shape() const noexcept { return shape_; }
  Index dim(std::size_t i) const { return shape_.at(i); }
  Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
  Index size() const noexcept { return data_.size(); }

  Vector<Scalar>& data() noexcept { return data_; }
  const Vector<Scalar>& data() const noexcept { return data_; }

  bool has_grad() const noexcept { return grad_.size() == data_.size() && data_.size() > 0; }
  Vector<Scalar>& grad() {
    if (!has_grad()) grad_ = Vector<Scalar>::Zero(data_.size());
    return grad_;
  }
  const Vector<Scalar>& grad() const { return grad_; }
  void zero_grad() {
    if (has_grad()) grad_.setZero();
  }

  /// dim(0) x (size / dim(0)) row-major view.
  Eigen::Map<RowMatrix<Scalar>> rows() { return {data_.data(), shape_.at(0), size() / shape_.at(0)}; }
  Eigen::Map<const RowMatrix<Scalar>> rows() const {
    return {data_.data(), shape_.at(0), size() / shape_.at(0)};
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  static Index count(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<>());
  }

 private:
  Shape shape_;
  Vector<Scalar> data_;
  Vector<Scalar> grad_;
};

inline std::string shape_string(const std::vector<Index>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace rsqa::nn
