// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rsqa {

inline constexpr int kSampleRate = 16000;

/// Mono waveform. Every clip produced by ingestion is at 16 kHz; samples
/// produced by read_wav are in [-1, 1], derived signals (residuals) may
/// exceed that range.
struct AudioClip {
  Eigen::ArrayXd samples;
  int sample_rate = kSampleRate;

  AudioClip() = default;
  explicit AudioClip(Eigen::ArrayXd s, int rate = kSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}

  Eigen::Index size() const noexcept { return samples.size(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Throws kContract if the clip is empty, non-finite or not at 16 kHz.
void validate_clip(const AudioClip& clip);

/// Reads PCM16 or float32 RIFF/WAVE, 1-2 channels. Stereo is averaged and
/// any supported rate is brought to 16 kHz by linear interpolation.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes PCM16 mono 16 kHz. Samples are clamped to [-1, 1] and quantized
/// with round-half-away-from-zero.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

/// The signal read_wav would return after write_wav.
AudioClip quantize_pcm16(const AudioClip& clip);

/// Linear-interpolation resampler. Output length is
/// round(n * target_rate / source_rate).
Eigen::ArrayXd resample_linear(const Eigen::ArrayXd& x, int source_rate,
                               int target_rate);

struct CorpusRecord {
  std::string clip_path;
  double mos = 0.0;
  std::optional<std::string> enhanced_path;
  std::string condition_tag;
};

struct Manifest {
  std::filesystem::path root_dir;
  std::vector<CorpusRecord> records;

  std::filesystem::path resolve(const std::string& relative) const {
    return root_dir / relative;
  }
};

/// Parses `clip_path,mos,enhanced_path,condition_tag` CSV. root_dir is the
/// directory containing the manifest.
Manifest load_manifest(const std::filesystem::path& path);

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// degraded_path -> clean_path, both relative to the manifest directory.
/// Returns an empty vector when the file does not exist.
std::vector<std::pair<std::string, std::string>> load_clean_refs(
    const std::filesystem::path& path);

}  // namespace rsqa
