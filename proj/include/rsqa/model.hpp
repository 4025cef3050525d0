// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rsqa/dsp.hpp"
#include "rsqa/nn/layers.hpp"
#include "rsqa/nn/tensor.hpp"

namespace rsqa {

/// CNN regressor layout: four blocks of three 3x3 convolutions (the last one
/// in each block strides the frequency axis by 3), then a per-frame
/// FC-128 / ReLU / dropout / FC-1 head and mean pooling over frames.
struct ModelConfig {
  std::array<int, 4> block_channels{16, 32, 64, 128};
  int convs_per_block = 3;
  int kernel = 3;
  int freq_stride_last_conv = 3;
  int fc_hidden = 128;
  double dropout_p = 0.3;
  int input_channels = 2;
  int input_bins = 257;

  void validate() const;
  /// Frequency bins left after the trunk (4 for 257 input bins).
  int trunk_bins() const;
  int frame_features() const { return block_channels.back() * trunk_bins(); }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Named parameter list in a fixed order; the order is part of the
/// checkpoint contract.
template <typename Scalar>
struct ModelParams {
  std::vector<std::string> names;
  std::vector<nn::Tensor<Scalar>> tensors;

  std::size_t size() const noexcept { return tensors.size(); }
  nn::Index scalar_count() const {
    nn::Index n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
};

template <typename Scalar>
class QualityNet {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  /// All parameters zero; call init() or assign params() before use.
  explicit QualityNet(const ModelConfig& config);

  /// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
  void init(std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ModelParams<Scalar>& params() noexcept { return params_; }
  const ModelParams<Scalar>& params() const noexcept { return params_; }

  /// Unclamped utterance score (mean of per-frame scores). Input shape is
  /// [input_channels, T, input_bins]. `rng` drives dropout in train mode.
  Scalar forward(const nn::Tensor<Scalar>& input, nn::Mode mode, std::mt19937_64& rng);
  Scalar forward(const FeatureTensor& features, nn::Mode mode, std::mt19937_64& rng);

  /// Eval-mode forward with the output clamped to [1, 5].
  Scalar predict(const FeatureTensor& features);

  /// Backpropagates dL/d(score) of the most recent forward call, accumulating
  /// parameter gradients.
  void backward(Scalar dscore);

  void zero_grad();

  /// Per-frame scores of the most recent forward call.
  const Matrix& frame_scores() const noexcept { return scores_; }

 private:
  struct ConvLayer {
    std::size_t weight, bias;
    nn::Index stride;
    nn::Conv2dCache<Scalar> cache;
    nn::Tensor<Scalar> output;  // post-ReLU activation
  };

  ModelConfig config_;
  ModelParams<Scalar> params_;
  std::vector<ConvLayer> convs_;
  std::size_t fc1_w_ = 0, fc1_b_ = 0, fc2_w_ = 0, fc2_b_ = 0;

  // Head caches.
  Matrix frame_inputs_;  // frame_features x T
  Matrix hidden_;        // post-ReLU, pre-dropout
  Matrix mask_;
  Matrix dropped_;
  Matrix scores_;  // 1 x T
};

nn::Tensor<float> to_tensor_f(const FeatureTensor& features);

template <typename Scalar>
nn::Tensor<Scalar> to_tensor(const FeatureTensor& features) {
  return nn::Tensor<Scalar>(
      {FeatureTensor::kChannels, features.frames, features.bins},
      Eigen::Map<const nn::Vector<double>>(features.values.data(), features.values.size())
          .template cast<Scalar>());
}

extern template class QualityNet<float>;
extern template class QualityNet<double>;

}  // namespace rsqa
