// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/training.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "rsqa/error.hpp"
#include "rsqa/random.hpp"

namespace rsqa {

namespace {

// Independent streams derived from the run seed.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::uint64_t kDropoutStream = 4;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw Error(ErrorKind::kValidation, "unknown optimizer '" + name + "' (expected adam or sgd)");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw Error(ErrorKind::kValidation, "lr must be > 0");
  if (batch_size < 1) throw Error(ErrorKind::kValidation, "batch_size must be >= 1");
  if (max_epochs < 1) throw Error(ErrorKind::kValidation, "max_epochs must be >= 1");
  if (patience < 0) throw Error(ErrorKind::kValidation, "patience must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw Error(ErrorKind::kValidation, "val_fraction must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error(ErrorKind::kValidation, "adam betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::kValidation, "epsilon must be > 0");
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty())
    throw Error(ErrorKind::kShape, "mse_loss: lengths must match and be >= 1");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - target[i]) * (pred[i] - target[i]);
  return acc / static_cast<double>(pred.size());
}

std::vector<double> mse_loss_grad(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty())
    throw Error(ErrorKind::kShape, "mse_loss: lengths must match and be >= 1");
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    g[i] = 2.0 * (pred[i] - target[i]) / static_cast<double>(pred.size());
  return g;
}

QualityNet<float> make_model(const Checkpoint& ckpt) {
  QualityNet<float> net(ckpt.model);
  if (net.params().names != ckpt.params.names)
    throw Error(ErrorKind::kFormat, "checkpoint parameters do not match the model layout");
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    if (net.params().tensors[i].shape() != ckpt.params.tensors[i].shape())
      throw Error(ErrorKind::kShape, "checkpoint tensor " + ckpt.params.names[i] +
                                         " has shape " +
                                         nn::shape_string(ckpt.params.tensors[i].shape()));
    net.params().tensors[i].data() = ckpt.params.tensors[i].data();
  }
  return net;
}

std::vector<double> predict_all(QualityNet<float>& model, std::span<const FeatureTensor> features) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(static_cast<double>(model.predict(f)));
  return out;
}

void write_train_log(std::span<const EpochLog> log, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "epoch,train_loss,val_rmse,val_pcc,val_srcc\n";
  for (const auto& e : log)
    out << e.epoch << ',' << csv_number(e.train_loss) << ',' << csv_number(e.val_rmse) << ','
        << csv_number(e.val_pcc) << ',' << csv_number(e.val_srcc) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

TrainResult train_on_features(std::span<const FeatureTensor> features,
                              std::span<const double> labels, const PipelineConfig& pipeline,
                              const TrainConfig& cfg, const ModelConfig& model_cfg,
                              const TrainOutputs& outputs) {
  cfg.validate();
  model_cfg.validate();
  if (features.size() != labels.size())
    throw Error(ErrorKind::kShape, "train: features and labels differ in length");
  if (features.size() < 2)
    throw Error(ErrorKind::kContract, "train: need at least 2 clips");
  if (model_cfg.input_bins != pipeline.stft.bins())
    throw Error(ErrorKind::kValidation, "model input_bins does not match the STFT bin count");

  TrainResult result;
  const std::size_t n = features.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (cfg.val_fraction > 0.0) {
    Rng split_rng(stream_seed(cfg.seed, kSplitStream));
    shuffle(order, split_rng);
    const auto n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(n))), 1,
        n - 1);
    result.val_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    result.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(result.val_indices.begin(), result.val_indices.end());
    std::sort(result.train_indices.begin(), result.train_indices.end());
  } else {
    result.train_indices = order;
    result.val_indices = order;
  }

  QualityNet<float> net(model_cfg);
  net.init(stream_seed(cfg.seed, kInitStream));
  AdamState<float> adam;
  adam.reset(net.params());
  const AdamHyper hyper{cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon};

  Rng shuffle_rng(stream_seed(cfg.seed, kShuffleStream));
  std::mt19937_64 dropout_rng(stream_seed(cfg.seed, kDropoutStream));

  std::vector<FeatureTensor> val_features;
  std::vector<double> val_labels;
  for (std::size_t i : result.val_indices) {
    val_features.push_back(features[i]);
    val_labels.push_back(labels[i]);
  }

  Checkpoint& best = result.checkpoint;
  best.model = model_cfg;
  best.pipeline = pipeline;
  best.train = cfg;
  best.best_val_rmse = std::numeric_limits<double>::infinity();
  int stale = 0;

  std::vector<std::size_t> epoch_order = result.train_indices;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(epoch_order, shuffle_rng);
    double sq_error = 0.0;
    for (std::size_t start = 0; start < epoch_order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(epoch_order.size(), start + cfg.batch_size);
      const auto batch = static_cast<float>(stop - start);
      net.zero_grad();
      for (std::size_t j = start; j < stop; ++j) {
        const std::size_t i = epoch_order[j];
        const float pred = net.forward(features[i], nn::Mode::kTrain, dropout_rng);
        const float err = pred - static_cast<float>(labels[i]);
        if (!std::isfinite(err))
          throw Error(ErrorKind::kDivergence, "divergence at epoch " + std::to_string(epoch));
        sq_error += static_cast<double>(err) * err;
        net.backward(2.0f * err / batch);
      }
      if (cfg.optimizer == OptimizerKind::kAdam)
        adam_step(net.params(), adam, hyper);
      else
        sgd_step(net.params(), cfg.lr);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = sq_error / static_cast<double>(epoch_order.size());
    if (!std::isfinite(entry.train_loss))
      throw Error(ErrorKind::kDivergence, "divergence at epoch " + std::to_string(epoch));
    const std::vector<double> pred = predict_all(net, val_features);
    entry.val_rmse = rmse(pred, val_labels);
    try {
      entry.val_pcc = pcc(pred, val_labels);
      entry.val_srcc = srcc(pred, val_labels);
    } catch (const Error&) {
      // constant predictions or a single validation clip
    }
    result.log.push_back(entry);
    if (outputs.on_epoch) outputs.on_epoch(entry);

    if (entry.val_rmse < best.best_val_rmse) {
      best.best_val_rmse = entry.val_rmse;
      best.epoch = epoch;
      best.params = net.params();
      best.optimizer = adam;
      stale = 0;
    } else if (++stale > cfg.patience) {
      break;
    }
  }
  for (auto& t : best.params.tensors) t = nn::Tensor<float>(t.shape(), t.data());

  if (outputs.checkpoint) save_checkpoint(best, *outputs.checkpoint);
  if (outputs.log_csv) write_train_log(result.log, *outputs.log_csv);
  return result;
}

TrainResult train(const Manifest& manifest, const PipelineConfig& pipeline,
                  const TrainConfig& train_cfg, const ModelConfig& model_cfg,
                  const TrainOutputs& outputs) {
  if (manifest.records.size() < 5)
    throw Error(ErrorKind::kContract, "train: manifest needs at least 5 records");
  const std::vector<FeatureTensor> features = extract_manifest_features(manifest, pipeline);
  std::vector<double> labels;
  for (const auto& r : manifest.records) labels.push_back(r.mos);
  return train_on_features(features, labels, pipeline, train_cfg, model_cfg, outputs);
}

EvalReport evaluate(const Manifest& manifest, const Checkpoint& ckpt,
                    std::optional<EnhancerKind> enhancer) {
  PipelineConfig pipeline = ckpt.pipeline;
  if (enhancer) pipeline.enhancer = *enhancer;
  const std::vector<FeatureTensor> features = extract_manifest_features(manifest, pipeline);
  QualityNet<float> net = make_model(ckpt);
  const std::vector<double> pred = predict_all(net, features);
  EvalReport report;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    report.rows.push_back({r.clip_path, r.mos, pred[i], r.condition_tag});
  }
  report.recompute();
  return report;
}

}  // namespace rsqa
