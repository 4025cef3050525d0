// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <json.hpp>

#include "rsqa/error.hpp"
#include "rsqa/training.hpp"

namespace rsqa {

namespace {

constexpr char kMagic[8] = {'R', 'S', 'Q', 'A', 'C', 'K', 'P', 'T'};
constexpr std::size_t kPreambleBytes = 8 + 4 + 8;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in native little-endian order");

using nlohmann::json;

json model_json(const ModelConfig& m) {
  return {{"block_channels", m.block_channels},
          {"convs_per_block", m.convs_per_block},
          {"kernel", m.kernel},
          {"freq_stride_last_conv", m.freq_stride_last_conv},
          {"fc_hidden", m.fc_hidden},
          {"dropout_p", m.dropout_p},
          {"input_channels", m.input_channels},
          {"input_bins", m.input_bins}};
}

ModelConfig model_from(const json& j) {
  ModelConfig m;
  m.block_channels = j.at("block_channels").get<std::array<int, 4>>();
  m.convs_per_block = j.at("convs_per_block").get<int>();
  m.kernel = j.at("kernel").get<int>();
  m.freq_stride_last_conv = j.at("freq_stride_last_conv").get<int>();
  m.fc_hidden = j.at("fc_hidden").get<int>();
  m.dropout_p = j.at("dropout_p").get<double>();
  m.input_channels = j.at("input_channels").get<int>();
  m.input_bins = j.at("input_bins").get<int>();
  return m;
}

json pipeline_json(const PipelineConfig& p) {
  return {{"enhancer", to_string(p.enhancer)},
          {"use_residual", p.use_residual},
          {"oversubtraction", p.gate.oversubtraction},
          {"gain_floor", p.gate.gain_floor},
          {"noise_quantile", p.gate.noise_quantile},
          {"gate_margin", p.gate_margin}};
}

PipelineConfig pipeline_from(const json& j, const json& stft) {
  PipelineConfig p;
  p.enhancer = parse_enhancer(j.at("enhancer").get<std::string>());
  p.use_residual = j.at("use_residual").get<bool>();
  p.gate.oversubtraction = j.at("oversubtraction").get<double>();
  p.gate.gain_floor = j.at("gain_floor").get<double>();
  p.gate.noise_quantile = j.at("noise_quantile").get<double>();
  p.gate_margin = j.at("gate_margin").get<double>();
  p.stft.fft_size = stft.at("fft_size").get<int>();
  p.stft.hop = stft.at("hop").get<int>();
  return p;
}

json train_json(const TrainConfig& t) {
  return {{"lr", t.lr},
          {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"seed", t.seed},
          {"val_fraction", t.val_fraction},
          {"optimizer", to_string(t.optimizer)},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"epsilon", t.epsilon}};
}

TrainConfig train_from(const json& j) {
  TrainConfig t;
  t.lr = j.at("lr").get<double>();
  t.batch_size = j.at("batch_size").get<int>();
  t.max_epochs = j.at("max_epochs").get<int>();
  t.patience = j.at("patience").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.val_fraction = j.at("val_fraction").get<double>();
  t.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  t.beta1 = j.at("beta1").get<double>();
  t.beta2 = j.at("beta2").get<double>();
  t.epsilon = j.at("epsilon").get<double>();
  return t;
}

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::vector<std::pair<std::string, const nn::Vector<float>*>> blobs;
  std::vector<nn::Tensor<float>::Shape> shapes;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    blobs.emplace_back(ckpt.params.names[i], &ckpt.params.tensors[i].data());
    shapes.push_back(ckpt.params.tensors[i].shape());
  }
  if (ckpt.optimizer.m.size() == ckpt.params.size()) {
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
      blobs.emplace_back("adam.m." + ckpt.params.names[i], &ckpt.optimizer.m[i]);
      shapes.push_back(ckpt.params.tensors[i].shape());
    }
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
      blobs.emplace_back("adam.v." + ckpt.params.names[i], &ckpt.optimizer.v[i]);
      shapes.push_back(ckpt.params.tensors[i].shape());
    }
  }

  json header;
  header["format_version"] = ckpt.format_version;
  header["model_config"] = model_json(ckpt.model);
  header["stft_config"] = {{"fft_size", ckpt.pipeline.stft.fft_size},
                           {"hop", ckpt.pipeline.stft.hop},
                           {"window", "hann-periodic"}};
  header["pipeline"] = pipeline_json(ckpt.pipeline);
  header["train_config"] = train_json(ckpt.train);
  header["metadata"] = {{"epoch", ckpt.epoch},
                        {"best_val_rmse", ckpt.best_val_rmse},
                        {"seed", ckpt.train.seed},
                        {"adam_step", ckpt.optimizer.step}};
  header["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    const auto count = static_cast<std::uint64_t>(blobs[i].second->size());
    header["tensors"].push_back(
        {{"name", blobs[i].first}, {"shape", shapes[i]}, {"offset", offset}, {"count", count}});
    offset += count * sizeof(float);
  }
  header["payload_bytes"] = offset;

  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_le(out, static_cast<std::uint32_t>(ckpt.format_version), 4);
  put_le(out, text.size(), 8);
  out += text;
  for (const auto& [name, data] : blobs)
    out.append(reinterpret_cast<const char*>(data->data()),
               static_cast<std::size_t>(data->size()) * sizeof(float));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                         std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (bytes.size() < kPreambleBytes || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw Error(ErrorKind::kFormat, where + "bad checkpoint magic");
  const auto version = static_cast<int>(get_le(bytes.data() + 8, 4));
  if (version != Checkpoint::kFormatVersion)
    throw Error(ErrorKind::kFormat, where + "unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t header_len = get_le(bytes.data() + 12, 8);
  if (header_len > bytes.size() - kPreambleBytes)
    throw Error(ErrorKind::kFormat, where + "truncated checkpoint header");
  const std::size_t payload_start = kPreambleBytes + header_len;
  const std::size_t payload_bytes = bytes.size() - payload_start;

  Checkpoint ckpt;
  try {
    const json header = json::parse(bytes.begin() + kPreambleBytes, bytes.begin() + static_cast<std::ptrdiff_t>(payload_start));
    if (header.at("format_version").get<int>() != version)
      throw Error(ErrorKind::kFormat, where + "header version disagrees with preamble");
    ckpt.format_version = version;
    ckpt.model = model_from(header.at("model_config"));
    ckpt.pipeline = pipeline_from(header.at("pipeline"), header.at("stft_config"));
    ckpt.train = train_from(header.at("train_config"));
    const json& meta = header.at("metadata");
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.best_val_rmse = meta.at("best_val_rmse").get<double>();
    ckpt.optimizer.step = meta.at("adam_step").get<std::int64_t>();
    if (header.at("payload_bytes").get<std::uint64_t>() != payload_bytes)
      throw Error(ErrorKind::kFormat, where + "payload length " + std::to_string(payload_bytes) +
                                          " does not match header");

    std::map<std::string, nn::Tensor<float>> loaded;
    for (const auto& t : header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<nn::Tensor<float>::Shape>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto count = t.at("count").get<std::uint64_t>();
      if (static_cast<std::uint64_t>(nn::Tensor<float>::count(shape)) != count)
        throw Error(ErrorKind::kFormat, where + "tensor " + name + " shape disagrees with count");
      if (offset + count * sizeof(float) > payload_bytes)
        throw Error(ErrorKind::kFormat, where + "tensor " + name + " exceeds the payload");
      nn::Vector<float> data(static_cast<Eigen::Index>(count));
      std::memcpy(data.data(), bytes.data() + payload_start + offset, count * sizeof(float));
      loaded.emplace(name, nn::Tensor<float>(shape, std::move(data)));
    }

    const QualityNet<float> layout(ckpt.model);
    ckpt.params.names = layout.params().names;
    for (std::size_t i = 0; i < ckpt.params.names.size(); ++i) {
      const std::string& name = ckpt.params.names[i];
      auto it = loaded.find(name);
      if (it == loaded.end()) throw Error(ErrorKind::kFormat, where + "missing tensor " + name);
      if (it->second.shape() != layout.params().tensors[i].shape())
        throw Error(ErrorKind::kFormat, where + "tensor " + name + " has shape " +
                                            nn::shape_string(it->second.shape()) +
                                            ", model expects " +
                                            nn::shape_string(layout.params().tensors[i].shape()));
      ckpt.params.tensors.push_back(it->second);
    }
    if (loaded.count("adam.m." + ckpt.params.names.front())) {
      for (const auto& name : ckpt.params.names) {
        auto m = loaded.find("adam.m." + name);
        auto v = loaded.find("adam.v." + name);
        if (m == loaded.end() || v == loaded.end())
          throw Error(ErrorKind::kFormat, where + "incomplete optimizer state for " + name);
        ckpt.optimizer.m.push_back(m->second.data());
        ckpt.optimizer.v.push_back(v->second.data());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, where + "malformed checkpoint header: " + e.what());
  }
  return ckpt;
}

}  // namespace rsqa
