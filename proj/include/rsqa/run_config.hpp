// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rsqa/model.hpp"
#include "rsqa/pipeline.hpp"
#include "rsqa/training.hpp"

namespace rsqa {

/// Merged experiment configuration. Files hold a flat JSON object with
/// dotted keys, e.g. {"train.lr": 0.0005, "enhancer.kind": "none"}.
struct RunConfig {
  TrainConfig train;
  ModelConfig model;
  PipelineConfig pipeline;
  /// Generator objective weight; reported, not used by regression training.
  double alpha = kDefaultGeneratorAlpha;

  /// Sets one dotted key from JSON text (bare strings are accepted as-is).
  /// Unknown keys throw kValidation.
  void set(const std::string& key, const std::string& value);
  /// Applies every key of a flat JSON object file.
  void load_file(const std::filesystem::path& path);
  void validate() const;

  static std::vector<std::string> keys();
  /// The full configuration as a flat JSON object.
  std::string to_json() const;
};

}  // namespace rsqa
