// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "rsqa/audio_io.hpp"
#include "rsqa/dsp.hpp"

namespace rsqa {

/// Spectral gating enhancer. The per-bin noise floor is a quantile of the
/// bin's magnitudes across frames.
struct SpectralGateParams {
  double oversubtraction = 1.5;
  double gain_floor = 0.05;
  double noise_quantile = 0.10;

  void validate() const;
};

AudioClip spectral_gate_enhance(const AudioClip& clip,
                                const SpectralGateParams& params = {},
                                const StftConfig& cfg = {});

/// Reads the pre-computed enhancement named by record.enhanced_path.
AudioClip external_enhanced(const CorpusRecord& record,
                            const std::filesystem::path& root);

/// Sum of squared sample differences.
double loss_l2(const AudioClip& generated, const AudioClip& target);

/// Comparative band-energy feature: frames x 8 matrix of
/// ln(E_b(a) + 1e-7) - ln(E_b(b) + 1e-7) over 8 uniform bands of the
/// magnitude spectrogram.
Eigen::ArrayXXd band_log_energy_difference(const AudioClip& a, const AudioClip& b,
                                           const StftConfig& cfg = {});

inline constexpr int kPerceptualBands = 8;

/// ||phi(target, impaired) - phi(generated, impaired)||^2 with phi as above.
double loss_perceptual(const AudioClip& generated, const AudioClip& impaired,
                       const AudioClip& target, const StftConfig& cfg = {});

struct GeneratorLossReport {
  double l2 = 0.0;
  double perceptual = 0.0;
  double alpha = 0.0;
  double total = 0.0;
};

inline constexpr double kDefaultGeneratorAlpha = 0.5;

/// l2(generated, target) + alpha * perceptual(generated, impaired, target).
GeneratorLossReport generator_objective(const AudioClip& generated,
                                        const AudioClip& impaired,
                                        const AudioClip& target, double alpha);

/// Intrusive quality proxy in (1, 5): 1 + 4 / (1 + exp(-0.25 (segsnr - 10))).
double quality_score_proxy(const AudioClip& clip, const AudioClip& reference);

/// Residual with badly-enhanced outputs suppressed. With a reference, a zero
/// residual is returned when the enhanced clip scores below the impaired one
/// by more than `margin`. Without a reference the gate is open.
AudioClip gated_residual(const AudioClip& impaired, const AudioClip& enhanced,
                         double margin = 0.0,
                         const std::optional<AudioClip>& reference = std::nullopt);

/// True when gated_residual would suppress the residual.
bool residual_suppressed(const AudioClip& impaired, const AudioClip& enhanced,
                         const AudioClip& reference, double margin = 0.0);

}  // namespace rsqa
