// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/model.hpp"

#include <algorithm>

#include "rsqa/error.hpp"

namespace rsqa {

using nn::Index;
using nn::Tensor;

void ModelConfig::validate() const {
  if (convs_per_block != 3)
    throw Error(ErrorKind::kValidation, "convs_per_block must be 3");
  if (kernel != 3) throw Error(ErrorKind::kValidation, "kernel must be 3");
  if (freq_stride_last_conv != 1 && freq_stride_last_conv != 3)
    throw Error(ErrorKind::kValidation, "freq_stride_last_conv must be 1 or 3");
  if (fc_hidden != 128) throw Error(ErrorKind::kValidation, "fc_hidden must be 128");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw Error(ErrorKind::kValidation, "dropout_p must be in [0, 1)");
  if (input_channels != 2) throw Error(ErrorKind::kValidation, "input_channels must be 2");
  if (input_bins < 1) throw Error(ErrorKind::kValidation, "input_bins must be positive");
  for (int c : block_channels)
    if (c < 1) throw Error(ErrorKind::kValidation, "block_channels must be positive");
}

int ModelConfig::trunk_bins() const {
  Index bins = input_bins;
  for (std::size_t b = 0; b < block_channels.size(); ++b)
    bins = nn::strided_length(bins, freq_stride_last_conv);
  return static_cast<int>(bins);
}

template <typename Scalar>
QualityNet<Scalar>::QualityNet(const ModelConfig& config) : config_(config) {
  config_.validate();
  auto add = [this](std::string name, typename Tensor<Scalar>::Shape shape) {
    params_.names.push_back(std::move(name));
    params_.tensors.emplace_back(std::move(shape));
    return params_.tensors.size() - 1;
  };
  Index in = config_.input_channels;
  for (std::size_t b = 0; b < config_.block_channels.size(); ++b) {
    const Index out = config_.block_channels[b];
    for (int i = 0; i < config_.convs_per_block; ++i) {
      const std::string prefix =
          "block" + std::to_string(b + 1) + ".conv" + std::to_string(i + 1);
      ConvLayer layer;
      layer.weight = add(prefix + ".weight", {out, in, nn::kKernel, nn::kKernel});
      layer.bias = add(prefix + ".bias", {out});
      layer.stride = i + 1 == config_.convs_per_block ? config_.freq_stride_last_conv : 1;
      convs_.push_back(std::move(layer));
      in = out;
    }
  }
  fc1_w_ = add("fc1.weight", {config_.fc_hidden, config_.frame_features()});
  fc1_b_ = add("fc1.bias", {config_.fc_hidden});
  fc2_w_ = add("fc2.weight", {1, config_.fc_hidden});
  fc2_b_ = add("fc2.bias", {1});
}

template <typename Scalar>
void QualityNet<Scalar>::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& t : params_.tensors) {
    if (t.rank() == 1) {
      t.data().setZero();
      continue;
    }
    const double fan_in = static_cast<double>(t.size() / t.dim(0));
    const double limit = std::sqrt(6.0 / fan_in);
    for (Index i = 0; i < t.size(); ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      t.data()[i] = static_cast<Scalar>((2.0 * u - 1.0) * limit);
    }
  }
}

template <typename Scalar>
Scalar QualityNet<Scalar>::forward(const Tensor<Scalar>& input, nn::Mode mode,
                                   std::mt19937_64& rng) {
  if (input.rank() != 3 || input.dim(0) != config_.input_channels ||
      input.dim(2) != config_.input_bins || input.dim(1) < 1)
    throw Error(ErrorKind::kShape, "model input must be [" +
                                       std::to_string(config_.input_channels) + ", T, " +
                                       std::to_string(config_.input_bins) + "], got " +
                                       nn::shape_string(input.shape()));
  auto& P = params_.tensors;
  const Tensor<Scalar>* x = &input;
  for (auto& layer : convs_) {
    layer.output = nn::conv2d_forward(*x, P[layer.weight], P[layer.bias], layer.stride,
                                      layer.cache);
    nn::relu_inplace(layer.output);
    x = &layer.output;
  }

  // [C, T, F] -> (C * F) x T, feature index c * F + f.
  const Index channels = x->dim(0), frames = x->dim(1), bins = x->dim(2);
  frame_inputs_.resize(channels * bins, frames);
  const Scalar* src = x->data().data();
  for (Index c = 0; c < channels; ++c)
    for (Index t = 0; t < frames; ++t)
      for (Index f = 0; f < bins; ++f)
        frame_inputs_(c * bins + f, t) = src[(c * frames + t) * bins + f];

  hidden_ = nn::dense_forward<Scalar>(frame_inputs_, P[fc1_w_], P[fc1_b_]).cwiseMax(Scalar(0));
  mask_ = nn::dropout_mask<Scalar>(hidden_.rows(), hidden_.cols(), config_.dropout_p, mode, rng);
  dropped_ = hidden_.cwiseProduct(mask_);
  scores_ = nn::dense_forward<Scalar>(dropped_, P[fc2_w_], P[fc2_b_]);
  return nn::mean_pool_time<Scalar>(scores_);
}

template <typename Scalar>
Scalar QualityNet<Scalar>::forward(const FeatureTensor& features, nn::Mode mode,
                                   std::mt19937_64& rng) {
  return forward(to_tensor<Scalar>(features), mode, rng);
}

template <typename Scalar>
Scalar QualityNet<Scalar>::predict(const FeatureTensor& features) {
  std::mt19937_64 unused(0);
  const Scalar raw = forward(features, nn::Mode::kEval, unused);
  return std::clamp(raw, Scalar(1), Scalar(5));
}

template <typename Scalar>
void QualityNet<Scalar>::backward(Scalar dscore) {
  auto& P = params_.tensors;
  const Index frames = scores_.cols();
  const Matrix dscores = Matrix::Constant(1, frames, dscore / static_cast<Scalar>(frames));
  Matrix d = nn::dense_backward<Scalar>(dscores, dropped_, P[fc2_w_], P[fc2_b_]);
  d = d.cwiseProduct(mask_);
  d = (hidden_.array() > Scalar(0)).select(d, Scalar(0));
  d = nn::dense_backward<Scalar>(d, frame_inputs_, P[fc1_w_], P[fc1_b_]);

  const Tensor<Scalar>& top = convs_.back().output;
  const Index channels = top.dim(0), bins = top.dim(2);
  Tensor<Scalar> grad(top.shape());
  Scalar* dst = grad.data().data();
  for (Index c = 0; c < channels; ++c)
    for (Index t = 0; t < frames; ++t)
      for (Index f = 0; f < bins; ++f) dst[(c * frames + t) * bins + f] = d(c * bins + f, t);

  for (auto it = convs_.rbegin(); it != convs_.rend(); ++it) {
    grad.data() = (it->output.data().array() > Scalar(0)).select(grad.data(), Scalar(0));
    grad = nn::conv2d_backward(grad, P[it->weight], P[it->bias], it->cache);
  }
}

template <typename Scalar>
void QualityNet<Scalar>::zero_grad() {
  for (auto& t : params_.tensors) {
    t.grad();
    t.zero_grad();
  }
}

nn::Tensor<float> to_tensor_f(const FeatureTensor& features) { return to_tensor<float>(features); }

template class QualityNet<float>;
template class QualityNet<double>;

}  // namespace rsqa
