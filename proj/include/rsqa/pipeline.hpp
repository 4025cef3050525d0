// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsqa/audio_io.hpp"
#include "rsqa/dsp.hpp"
#include "rsqa/enhancement.hpp"

namespace rsqa {

enum class EnhancerKind { kSpectralGate, kExternal, kNone };

std::string to_string(EnhancerKind kind);
/// Accepts "spectral-gate", "external", "none".
EnhancerKind parse_enhancer(const std::string& name);

/// Everything needed to turn an impaired clip into network input. Stored in
/// checkpoints so evaluation reproduces the training pipeline.
struct PipelineConfig {
  EnhancerKind enhancer = EnhancerKind::kSpectralGate;
  /// When false (or with no enhancer) channel 1 is all zeros.
  bool use_residual = true;
  SpectralGateParams gate;
  double gate_margin = 0.0;
  StftConfig stft;

  bool residual_enabled() const noexcept {
    return use_residual && enhancer != EnhancerKind::kNone;
  }
};

/// enhance -> gated residual -> two-channel log spectrogram. `reference` enables
/// gating; `external` is required for EnhancerKind::kExternal.
FeatureTensor extract_features(const AudioClip& impaired, const PipelineConfig& cfg,
                               const std::optional<AudioClip>& reference = std::nullopt,
                               const std::optional<AudioClip>& external = std::nullopt);

/// Features for every record of a manifest, in manifest order. Clean
/// references are taken from clean_ref.csv next to the manifest when present.
std::vector<FeatureTensor> extract_manifest_features(const Manifest& manifest,
                                                     const PipelineConfig& cfg);

}  // namespace rsqa
