// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsqa/metrics.hpp"
#include "rsqa/model.hpp"
#include "rsqa/pipeline.hpp"

namespace rsqa {

enum class OptimizerKind { kAdam, kSgd };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 4;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;
  /// Fraction of clips held out for validation. 0 disables the split and
  /// validates on the training clips.
  double val_fraction = 0.2;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Mean squared error.
double mse_loss(std::span<const double> pred, std::span<const double> target);
/// d(mse)/d(pred) = 2 (pred - target) / n.
std::vector<double> mse_loss_grad(std::span<const double> pred, std::span<const double> target);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates for every parameter tensor.
template <typename Scalar>
struct AdamState {
  std::vector<nn::Vector<Scalar>> m;
  std::vector<nn::Vector<Scalar>> v;
  std::int64_t step = 0;

  void reset(const ModelParams<Scalar>& params) {
    m.clear();
    v.clear();
    for (const auto& t : params.tensors) {
      m.push_back(nn::Vector<Scalar>::Zero(t.size()));
      v.push_back(nn::Vector<Scalar>::Zero(t.size()));
    }
    step = 0;
  }
};

/// One bias-corrected Adam update of `param` at step t (t >= 1).
template <typename Scalar>
void adam_update(Eigen::Ref<nn::Vector<Scalar>> param, const Eigen::Ref<const nn::Vector<Scalar>>& grad,
                 nn::Vector<Scalar>& m, nn::Vector<Scalar>& v, std::int64_t t,
                 const AdamHyper& h) {
  if (param.size() != grad.size() || m.size() != grad.size() || v.size() != grad.size())
    throw Error(ErrorKind::kShape, "adam: parameter, gradient and state sizes differ");
  if (t < 1) throw Error(ErrorKind::kContract, "adam: step must be >= 1");
  const auto b1 = static_cast<Scalar>(h.beta1), b2 = static_cast<Scalar>(h.beta2);
  m = b1 * m + (Scalar(1) - b1) * grad;
  v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(h.beta1, static_cast<double>(t)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(h.beta2, static_cast<double>(t)));
  const auto lr = static_cast<Scalar>(h.lr), eps = static_cast<Scalar>(h.epsilon);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

/// Applies one Adam step to every tensor using its accumulated gradient.
template <typename Scalar>
void adam_step(ModelParams<Scalar>& params, AdamState<Scalar>& state, const AdamHyper& h) {
  if (state.m.size() != params.size()) state.reset(params);
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = params.tensors[i];
    adam_update<Scalar>(t.data(), t.grad(), state.m[i], state.v[i], state.step, h);
  }
}

template <typename Scalar>
void sgd_step(ModelParams<Scalar>& params, double lr) {
  for (auto& t : params.tensors) t.data() -= static_cast<Scalar>(lr) * t.grad();
}

/// Self-describing training artifact.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  ModelConfig model;
  PipelineConfig pipeline;
  TrainConfig train;
  ModelParams<float> params;
  AdamState<float> optimizer;
  int epoch = 0;
  double best_val_rmse = 0.0;
  int format_version = kFormatVersion;
};

/// Magic "RSQACKPT", u32 format version, u64 header length, JSON header,
/// then the little-endian float32 payload described by the header.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Builds a float network carrying the checkpoint's parameters.
QualityNet<float> make_model(const Checkpoint& ckpt);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_rmse = 0.0;
  double val_pcc = std::nan("");
  double val_srcc = std::nan("");
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

struct TrainOutputs {
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> log_csv;
  std::function<void(const EpochLog&)> on_epoch;
};

/// Seeded split, per-epoch shuffled mini-batches, early stopping on
/// validation RMSE. The returned checkpoint holds the best epoch.
TrainResult train(const Manifest& manifest, const PipelineConfig& pipeline,
                  const TrainConfig& train_cfg, const ModelConfig& model_cfg,
                  const TrainOutputs& outputs = {});

/// Same, on features already extracted (in manifest order).
TrainResult train_on_features(std::span<const FeatureTensor> features,
                              std::span<const double> labels, const PipelineConfig& pipeline,
                              const TrainConfig& train_cfg, const ModelConfig& model_cfg,
                              const TrainOutputs& outputs = {});

void write_train_log(std::span<const EpochLog> log, const std::filesystem::path& path);

/// Eval-mode predictions, clamped to [1, 5].
std::vector<double> predict_all(QualityNet<float>& model, std::span<const FeatureTensor> features);

/// Runs the checkpoint's pipeline (optionally with another enhancer) over
/// the manifest and scores every clip.
EvalReport evaluate(const Manifest& manifest, const Checkpoint& ckpt,
                    std::optional<EnhancerKind> enhancer = std::nullopt);

}  // namespace rsqa
