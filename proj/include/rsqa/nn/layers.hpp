// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Forward/backward primitives of the regressor. Activations of the
// convolutional trunk are Tensors of shape [C, T, F]; the per-frame head
// works on column matrices (features x frames).

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <random>

#include "rsqa/nn/tensor.hpp"

namespace rsqa::nn {

inline constexpr Index kKernel = 3;

inline Index strided_length(Index n, Index stride) { return (n + stride - 1) / stride; }

template <typename Scalar>
struct Conv2dCache {
  Index in_channels = 0, frames = 0, in_bins = 0, out_bins = 0, stride = 1;
  RowMatrix<Scalar> columns;  // (C_in * 9) x (T * F_out)
};

// Valid output range [lo, hi) for kernel column df: input index f*stride+df-1
// must lie in [0, bins).
inline void kernel_column_range(Index df, Index stride, Index bins, Index out_bins,
                                Index& lo, Index& hi) {
  lo = df == 0 ? 1 : 0;
  hi = std::min(out_bins, (bins - df) / stride + 1);
  if (hi > 0 && (hi - 1) * stride + df - 1 >= bins) --hi;
}

// Unfolds the 3x3 neighbourhoods with one zero of padding on each side.
template <typename Scalar>
void im2col(const Tensor<Scalar>& x, Index stride, Conv2dCache<Scalar>& cache) {
  const Index c_in = x.dim(0), frames = x.dim(1), bins = x.dim(2);
  const Index out_bins = strided_length(bins, stride);
  cache.in_channels = c_in;
  cache.frames = frames;
  cache.in_bins = bins;
  cache.out_bins = out_bins;
  cache.stride = stride;
  cache.columns.resize(c_in * kKernel * kKernel, frames * out_bins);
  const Scalar* src = x.data().data();
  for (Index c = 0; c < c_in; ++c) {
    for (Index dt = 0; dt < kKernel; ++dt) {
      for (Index df = 0; df < kKernel; ++df) {
        Index lo, hi;
        kernel_column_range(df, stride, bins, out_bins, lo, hi);
        Scalar* dst = cache.columns.row((c * kKernel + dt) * kKernel + df).data();
        for (Index t = 0; t < frames; ++t) {
          Scalar* out_row = dst + t * out_bins;
          const Index ti = t + dt - 1;
          if (ti < 0 || ti >= frames) {
            std::fill(out_row, out_row + out_bins, Scalar(0));
            continue;
          }
          const Scalar* in_row = src + (c * frames + ti) * bins + df - 1;
          std::fill(out_row, out_row + lo, Scalar(0));
          if (stride == 1) {
            std::copy(in_row + lo, in_row + hi, out_row + lo);
          } else {
            for (Index f = lo; f < hi; ++f) out_row[f] = in_row[f * stride];
          }
          std::fill(out_row + hi, out_row + out_bins, Scalar(0));
        }
      }
    }
  }
}

template <typename Scalar>
Tensor<Scalar> col2im(const RowMatrix<Scalar>& columns, const Conv2dCache<Scalar>& cache) {
  const Index frames = cache.frames, bins = cache.in_bins, out_bins = cache.out_bins;
  const Index stride = cache.stride;
  Tensor<Scalar> dx({cache.in_channels, frames, bins});
  Scalar* dst = dx.data().data();
  for (Index c = 0; c < cache.in_channels; ++c) {
    for (Index dt = 0; dt < kKernel; ++dt) {
      for (Index df = 0; df < kKernel; ++df) {
        Index lo, hi;
        kernel_column_range(df, stride, bins, out_bins, lo, hi);
        const Scalar* src = columns.row((c * kKernel + dt) * kKernel + df).data();
        for (Index t = 0; t < frames; ++t) {
          const Index ti = t + dt - 1;
          if (ti < 0 || ti >= frames) continue;
          Scalar* in_row = dst + (c * frames + ti) * bins + df - 1;
          const Scalar* col_row = src + t * out_bins;
          for (Index f = lo; f < hi; ++f) in_row[f * stride] += col_row[f];
        }
      }
    }
  }
  return dx;
}

/// 3x3 cross-correlation with zero "same" padding, time stride 1 and
/// frequency stride `stride` (output bins = ceil(F / stride)).
/// weight: [C_out, C_in, 3, 3], bias: [C_out].
template <typename Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                              const Tensor<Scalar>& bias, Index stride,
                              Conv2dCache<Scalar>& cache) {
  if (x.rank() != 3 || weight.rank() != 4 || weight.dim(1) != x.dim(0) ||
      weight.dim(2) != kKernel || weight.dim(3) != kKernel || bias.size() != weight.dim(0))
    throw Error(ErrorKind::kShape, "conv2d: input " + shape_string(x.shape()) +
                                       " incompatible with weight " +
                                       shape_string(weight.shape()));
  if (stride != 1 && stride != 3)
    throw Error(ErrorKind::kContract, "conv2d: frequency stride must be 1 or 3");
  im2col(x, stride, cache);
  const Index c_out = weight.dim(0);
  Tensor<Scalar> y({c_out, x.dim(1), cache.out_bins});
  auto out = y.rows();
  out.noalias() = weight.rows() * cache.columns;
  out.colwise() += bias.data();
  return y;
}

/// Accumulates into weight.grad() and bias.grad(); returns dL/dx.
template <typename Scalar>
Tensor<Scalar> conv2d_backward(const Tensor<Scalar>& dy, Tensor<Scalar>& weight,
                               Tensor<Scalar>& bias, const Conv2dCache<Scalar>& cache) {
  const auto g = dy.rows();
  Eigen::Map<RowMatrix<Scalar>> dw(weight.grad().data(), weight.dim(0),
                                   weight.size() / weight.dim(0));
  dw.noalias() += g * cache.columns.transpose();
  bias.grad() += g.rowwise().sum();
  RowMatrix<Scalar> dcols = weight.rows().transpose() * g;
  return col2im(dcols, cache);
}

template <typename Scalar>
void relu_inplace(Tensor<Scalar>& x) {
  x.data() = x.data().cwiseMax(Scalar(0));
}

template <typename Scalar>
Tensor<Scalar> relu_forward(const Tensor<Scalar>& x) {
  Tensor<Scalar> y = x;
  relu_inplace(y);
  return y;
}

/// Gradient passes where the forward input (equivalently output) is > 0.
template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& dy, const Tensor<Scalar>& activation) {
  Tensor<Scalar> dx = dy;
  dx.data() = (activation.data().array() > Scalar(0)).select(dy.data(), Scalar(0));
  return dx;
}

/// y = W x + b applied to every column of x (features x frames).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense_forward(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x,
    const Tensor<Scalar>& weight, const Tensor<Scalar>& bias) {
  if (weight.rank() != 2 || weight.dim(1) != x.rows() || bias.size() != weight.dim(0))
    throw Error(ErrorKind::kShape, "dense: weight " + shape_string(weight.shape()) +
                                       " incompatible with input of " +
                                       std::to_string(x.rows()) + " features");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> y = weight.rows() * x;
  y.colwise() += bias.data();
  return y;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense_backward(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dy,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x,
    Tensor<Scalar>& weight, Tensor<Scalar>& bias) {
  Eigen::Map<RowMatrix<Scalar>> dw(weight.grad().data(), weight.dim(0), weight.dim(1));
  dw.noalias() += dy * x.transpose();
  bias.grad() += dy.rowwise().sum();
  return weight.rows().transpose() * dy;
}

enum class Mode { kTrain, kEval };

/// Inverted dropout. Returns the scaled keep mask (0 or 1/(1-p)); in eval
/// mode or with p = 0 the mask is all ones.
template <typename Scalar, typename Rng>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dropout_mask(Index rows, Index cols,
                                                                    double p, Mode mode,
                                                                    Rng& rng) {
  if (!(p >= 0.0 && p < 1.0))
    throw Error(ErrorKind::kValidation, "dropout probability must be in [0, 1)");
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (mode == Mode::kEval || p == 0.0) return M::Ones(rows, cols);
  M mask(rows, cols);
  const auto keep = static_cast<Scalar>(1.0 / (1.0 - p));
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      mask(i, j) = u < p ? Scalar(0) : keep;
    }
  return mask;
}

template <typename Scalar, typename Derived>
Scalar mean_pool_time(const Eigen::MatrixBase<Derived>& frame_scores) {
  if (frame_scores.size() == 0)
    throw Error(ErrorKind::kContract, "mean_pool_time: no frames");
  return frame_scores.sum() / static_cast<Scalar>(frame_scores.size());
}

}  // namespace rsqa::nn
