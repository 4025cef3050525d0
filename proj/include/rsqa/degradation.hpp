// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsqa/audio_io.hpp"

namespace rsqa {

/// Speech-like test signal: harmonic voiced syllables on a random-walk pitch
/// contour with two formant emphases, short unvoiced bursts, and silent gaps.
/// Peak-normalized to 0.5.
AudioClip gen_clean(std::uint64_t seed, double duration_s);

inline constexpr double kCleanPeak = 0.5;

/// Mean square over 20 ms frames whose energy exceeds 1e-6. Throws when all
/// frames are silent.
double active_power(const AudioClip& clip);

enum class NoiseKind { kWhite, kPink };

/// Adds noise at the given SNR (active-signal power vs noise power); the sum
/// is clamped to [-1, 1].
AudioClip add_noise_snr(const AudioClip& clip, NoiseKind kind, double snr_db,
                        std::uint64_t seed);

inline constexpr double kReverbTailGain = 0.02;

/// Unit direct path followed by an exponentially decaying white-noise tail
/// (amplitude decay ln(1000) / t60, length 1.5 * t60).
Eigen::ArrayXd synthetic_rir(double t60_s, std::uint64_t seed);

/// Convolves with synthetic_rir, truncates to the input length and restores
/// the input peak. t60 must be in [0.1, 1.5] s.
AudioClip add_reverb(const AudioClip& clip, double t60_s, std::uint64_t seed);

/// Zeroes independent Bernoulli(loss_rate) 20 ms frames, with 2 ms linear
/// fades at the edges of kept audio.
AudioClip packet_loss(const AudioClip& clip, double loss_rate, std::uint64_t seed);

/// Per-frame loss pattern used by packet_loss.
std::vector<bool> packet_loss_pattern(Eigen::Index samples, double loss_rate,
                                      std::uint64_t seed);

/// Hard clamp to [-threshold, threshold] followed by a 1/threshold gain.
AudioClip clip_distortion(const AudioClip& clip, double threshold);

/// Intrusive label oracle in (1, 5): 1 + 4 / (1 + exp(-0.22 (segsnr - 8))).
double pseudo_mos(const AudioClip& clean, const AudioClip& degraded);

enum class Degradation { kWhiteNoise, kPinkNoise, kReverb, kPacketLoss, kClipping };

std::string condition_name(Degradation d);

/// One entry of the condition mix: parameter drawn uniformly from [lo, hi]
/// (SNR dB, T60 s, loss rate, or clip threshold).
struct ConditionSpec {
  Degradation kind;
  double lo;
  double hi;
  double weight;
};

std::vector<ConditionSpec> default_condition_mix();

AudioClip apply_degradation(const AudioClip& clip, Degradation kind, double parameter,
                            std::uint64_t seed);

struct CorpusConfig {
  int n_clips = 100;
  double duration_s = 3.0;
  std::uint64_t seed = 0;
  std::vector<ConditionSpec> mix = default_condition_mix();
  /// Probability that a second, different degradation is chained.
  double chain_probability = 0.3;
  std::filesystem::path out_dir;

  void validate() const;
};

/// Writes out_dir/{clean,degraded}/NNNN.wav, manifest.csv and clean_ref.csv.
/// Labels are computed on the PCM16-quantized signals that are written.
Manifest build_corpus(const CorpusConfig& cfg);

}  // namespace rsqa
