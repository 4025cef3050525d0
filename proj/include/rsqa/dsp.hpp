// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "rsqa/audio_io.hpp"

namespace rsqa {

/// Short-time Fourier transform framing. Defaults give 257 bins at 16 kHz.
struct StftConfig {
  int fft_size = 512;
  int hop = 256;

  int bins() const noexcept { return fft_size / 2 + 1; }
  Eigen::Index frames_for(Eigen::Index length) const noexcept {
    return length < fft_size ? 0 : 1 + (length - fft_size) / hop;
  }
  /// Throws kValidation unless fft_size is a power of two and 0 < hop <= fft_size.
  void validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Periodic Hann window of length n.
Eigen::ArrayXd hann_periodic(int n);

enum class SpectrumScale { kLinear, kLog };

/// frames x bins real matrix.
struct Spectrogram {
  Eigen::ArrayXXd values;
  StftConfig config;
  SpectrumScale scale = SpectrumScale::kLinear;

  Eigen::Index frames() const noexcept { return values.rows(); }
  Eigen::Index bins() const noexcept { return values.cols(); }
};

/// frames x bins complex matrix (non-negative frequencies only).
struct ComplexSpectrogram {
  Eigen::ArrayXXcd values;
  StftConfig config;

  Eigen::Index frames() const noexcept { return values.rows(); }
  Eigen::Index bins() const noexcept { return values.cols(); }
};

/// Two-channel network input. `values` is channels x (frames * bins), row
/// major within a channel: element (c, t, k) lives at values(c, t * bins + k).
/// Channel 0 is the impaired log-spectrogram, channel 1 the residual one.
struct FeatureTensor {
  static constexpr Eigen::Index kChannels = 2;

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;
  Eigen::Index frames = 0;
  Eigen::Index bins = 0;

  double at(Eigen::Index c, Eigen::Index t, Eigen::Index k) const {
    return values(c, t * bins + k);
  }
};

/// Throws kContract "clip too short" when the clip is shorter than one window.
/// No zero padding: frames = 1 + floor((len - fft_size) / hop).
ComplexSpectrogram stft_complex(const AudioClip& clip, const StftConfig& cfg = {});

Spectrogram magnitude(const ComplexSpectrogram& spec);

inline constexpr double kLogFloor = 1e-7;

/// ln(x + 1e-7). Throws on a spectrogram that is already logarithmic.
Spectrogram log_compress(const Spectrogram& spec);

/// Weighted overlap-add with Hann synthesis, normalized by the summed
/// squared-window envelope (floored at 1e-8).
AudioClip istft(const ComplexSpectrogram& spec);

/// impaired - enhanced after truncating both to the shorter length. The
/// result is not renormalized.
AudioClip residual(const AudioClip& impaired, const AudioClip& enhanced);

FeatureTensor assemble_features(const AudioClip& impaired, const AudioClip& resid,
                                const StftConfig& cfg = {});

/// Mean over 20 ms frames whose reference energy exceeds 1e-6 of the
/// per-frame SNR, each clamped to [-10, 35] dB.
double segmental_snr(const AudioClip& reference, const AudioClip& test);

inline constexpr Eigen::Index kSegmentLength = 320;  // 20 ms at 16 kHz
inline constexpr double kSilenceEnergy = 1e-6;

}  // namespace rsqa
