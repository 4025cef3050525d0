// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/run_config.hpp"

#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>

#include "rsqa/error.hpp"

namespace rsqa {

namespace {

using nlohmann::json;

struct Field {
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

template <typename T, typename Member>
Field scalar(Member member) {
  return {[member](RunConfig& c, const json& v) { std::invoke(member, c) = v.get<T>(); },
          [member](const RunConfig& c) { return json(std::invoke(member, c)); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"train.lr", scalar<double>([](auto& c) -> auto& { return c.train.lr; })},
      {"train.batch_size", scalar<int>([](auto& c) -> auto& { return c.train.batch_size; })},
      {"train.max_epochs", scalar<int>([](auto& c) -> auto& { return c.train.max_epochs; })},
      {"train.patience", scalar<int>([](auto& c) -> auto& { return c.train.patience; })},
      {"train.seed", scalar<std::uint64_t>([](auto& c) -> auto& { return c.train.seed; })},
      {"train.val_fraction", scalar<double>([](auto& c) -> auto& { return c.train.val_fraction; })},
      {"train.optimizer",
       {[](RunConfig& c, const json& v) { c.train.optimizer = parse_optimizer(v.get<std::string>()); },
        [](const RunConfig& c) { return json(to_string(c.train.optimizer)); }}},
      {"train.beta1", scalar<double>([](auto& c) -> auto& { return c.train.beta1; })},
      {"train.beta2", scalar<double>([](auto& c) -> auto& { return c.train.beta2; })},
      {"train.epsilon", scalar<double>([](auto& c) -> auto& { return c.train.epsilon; })},
      {"model.block_channels",
       scalar<std::array<int, 4>>([](auto& c) -> auto& { return c.model.block_channels; })},
      {"model.convs_per_block", scalar<int>([](auto& c) -> auto& { return c.model.convs_per_block; })},
      {"model.kernel", scalar<int>([](auto& c) -> auto& { return c.model.kernel; })},
      {"model.freq_stride_last_conv",
       scalar<int>([](auto& c) -> auto& { return c.model.freq_stride_last_conv; })},
      {"model.fc_hidden", scalar<int>([](auto& c) -> auto& { return c.model.fc_hidden; })},
      {"model.dropout_p", scalar<double>([](auto& c) -> auto& { return c.model.dropout_p; })},
      {"model.input_channels", scalar<int>([](auto& c) -> auto& { return c.model.input_channels; })},
      {"model.input_bins", scalar<int>([](auto& c) -> auto& { return c.model.input_bins; })},
      {"stft.fft_size", scalar<int>([](auto& c) -> auto& { return c.pipeline.stft.fft_size; })},
      {"stft.hop", scalar<int>([](auto& c) -> auto& { return c.pipeline.stft.hop; })},
      {"enhancer.kind",
       {[](RunConfig& c, const json& v) { c.pipeline.enhancer = parse_enhancer(v.get<std::string>()); },
        [](const RunConfig& c) { return json(to_string(c.pipeline.enhancer)); }}},
      {"enhancer.use_residual", scalar<bool>([](auto& c) -> auto& { return c.pipeline.use_residual; })},
      {"enhancer.oversubtraction",
       scalar<double>([](auto& c) -> auto& { return c.pipeline.gate.oversubtraction; })},
      {"enhancer.gain_floor", scalar<double>([](auto& c) -> auto& { return c.pipeline.gate.gain_floor; })},
      {"enhancer.noise_quantile",
       scalar<double>([](auto& c) -> auto& { return c.pipeline.gate.noise_quantile; })},
      {"enhancer.gate_margin", scalar<double>([](auto& c) -> auto& { return c.pipeline.gate_margin; })},
      {"enhancer.alpha", scalar<double>([](auto& c) -> auto& { return c.alpha; })},
  };
  return table;
}

void apply(RunConfig& cfg, const std::string& key, const json& value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorKind::kValidation, "unknown config key '" + key + "'");
  try {
    it->second.set(cfg, value);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, "config key '" + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  apply(*this, key, parsed);
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  const json j = json::parse(text.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorKind::kFormat, path.string() + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) apply(*this, key, value);
}

void RunConfig::validate() const {
  train.validate();
  model.validate();
  pipeline.stft.validate();
  pipeline.gate.validate();
  if (model.input_bins != pipeline.stft.bins())
    throw Error(ErrorKind::kValidation, "model.input_bins (" + std::to_string(model.input_bins) +
                                            ") must equal stft.fft_size / 2 + 1 (" +
                                            std::to_string(pipeline.stft.bins()) + ")");
  if (!(alpha >= 0.0)) throw Error(ErrorKind::kValidation, "enhancer.alpha must be >= 0");
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [key, field] : fields()) out.push_back(key);
  return out;
}

std::string RunConfig::to_json() const {
  json j = json::object();
  for (const auto& [key, field] : fields()) j[key] = field.get(*this);
  return j.dump(2);
}

}  // namespace rsqa
