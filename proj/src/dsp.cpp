// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "rsqa/error.hpp"

namespace rsqa {

void StftConfig::validate() const {
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
    throw Error(ErrorKind::kValidation,
                "fft_size must be a power of two, got " + std::to_string(fft_size));
  if (hop < 1 || hop > fft_size)
    throw Error(ErrorKind::kValidation, "hop must be in [1, fft_size]");
}

Eigen::ArrayXd hann_periodic(int n) {
  Eigen::ArrayXd w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

ComplexSpectrogram stft_complex(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  if (clip.size() < cfg.fft_size)
    throw Error(ErrorKind::kContract,
                "clip too short: " + std::to_string(clip.size()) +
                    " samples, need at least " + std::to_string(cfg.fft_size));
  const Eigen::Index frames = cfg.frames_for(clip.size());
  const int n = cfg.fft_size;
  const Eigen::ArrayXd window = hann_periodic(n);

  ComplexSpectrogram out;
  out.config = cfg;
  out.values.resize(frames, cfg.bins());

  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> spectrum;
  for (Eigen::Index f = 0; f < frames; ++f) {
    const Eigen::Index start = f * cfg.hop;
    for (int i = 0; i < n; ++i) frame[i] = window[i] * clip.samples[start + i];
    fft.fwd(spectrum, frame);
    for (int k = 0; k < cfg.bins(); ++k) out.values(f, k) = spectrum[k];
  }
  return out;
}

Spectrogram magnitude(const ComplexSpectrogram& spec) {
  Spectrogram out;
  out.config = spec.config;
  out.scale = SpectrumScale::kLinear;
  out.values = spec.values.abs();
  return out;
}

Spectrogram log_compress(const Spectrogram& spec) {
  if (spec.scale == SpectrumScale::kLog)
    throw Error(ErrorKind::kContract, "double compression");
  Spectrogram out;
  out.config = spec.config;
  out.scale = SpectrumScale::kLog;
  out.values = (spec.values + kLogFloor).log();
  return out;
}

AudioClip istft(const ComplexSpectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  const int n = cfg.fft_size;
  const Eigen::Index frames = spec.frames();
  if (frames == 0) return AudioClip(Eigen::ArrayXd());
  if (spec.bins() != cfg.bins())
    throw Error(ErrorKind::kShape, "spectrogram bin count does not match config");
  const Eigen::Index length = (frames - 1) * cfg.hop + n;
  const Eigen::ArrayXd window = hann_periodic(n);

  Eigen::ArrayXd signal = Eigen::ArrayXd::Zero(length);
  Eigen::ArrayXd envelope = Eigen::ArrayXd::Zero(length);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> full(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> time;
  for (Eigen::Index f = 0; f < frames; ++f) {
    for (int k = 0; k < cfg.bins(); ++k) full[k] = spec.values(f, k);
    for (int k = cfg.bins(); k < n; ++k) full[k] = std::conj(full[n - k]);
    fft.inv(time, full);
    const Eigen::Index start = f * cfg.hop;
    for (int i = 0; i < n; ++i) {
      signal[start + i] += window[i] * time[i].real();
      envelope[start + i] += window[i] * window[i];
    }
  }
  return AudioClip(signal / envelope.max(1e-8));
}

AudioClip residual(const AudioClip& impaired, const AudioClip& enhanced) {
  if (impaired.sample_rate != enhanced.sample_rate)
    throw Error(ErrorKind::kContract, "residual: sample rate mismatch");
  if (impaired.size() == 0 || enhanced.size() == 0)
    throw Error(ErrorKind::kContract, "residual: empty clip");
  const double ratio =
      static_cast<double>(impaired.size()) / static_cast<double>(enhanced.size());
  if (ratio < 0.99 || ratio > 1.01)
    throw Error(ErrorKind::kContract,
                "unaligned enhancement: lengths " + std::to_string(impaired.size()) +
                    " and " + std::to_string(enhanced.size()));
  const Eigen::Index n = std::min(impaired.size(), enhanced.size());
  return AudioClip(impaired.samples.head(n) - enhanced.samples.head(n),
                   impaired.sample_rate);
}

FeatureTensor assemble_features(const AudioClip& impaired, const AudioClip& resid,
                                const StftConfig& cfg) {
  if (impaired.size() != resid.size() || impaired.sample_rate != resid.sample_rate)
    throw Error(ErrorKind::kShape, "assemble_features: impaired and residual are not aligned");
  const Spectrogram a = log_compress(magnitude(stft_complex(impaired, cfg)));
  const Spectrogram b = log_compress(magnitude(stft_complex(resid, cfg)));

  FeatureTensor out;
  out.frames = a.frames();
  out.bins = a.bins();
  out.values.resize(FeatureTensor::kChannels, out.frames * out.bins);
  for (Eigen::Index t = 0; t < out.frames; ++t) {
    for (Eigen::Index k = 0; k < out.bins; ++k) {
      out.values(0, t * out.bins + k) = a.values(t, k);
      out.values(1, t * out.bins + k) = b.values(t, k);
    }
  }
  return out;
}

double segmental_snr(const AudioClip& reference, const AudioClip& test) {
  if (reference.size() != test.size() || reference.sample_rate != test.sample_rate)
    throw Error(ErrorKind::kShape, "segmental_snr: clips are not aligned");
  const Eigen::Index segments = reference.size() / kSegmentLength;
  double total = 0.0;
  Eigen::Index counted = 0;
  for (Eigen::Index s = 0; s < segments; ++s) {
    const auto ref = reference.samples.segment(s * kSegmentLength, kSegmentLength);
    const double signal = ref.square().sum();
    if (signal <= kSilenceEnergy) continue;
    const double noise =
        (ref - test.samples.segment(s * kSegmentLength, kSegmentLength)).square().sum();
    const double snr = noise > 0.0 ? 10.0 * std::log10(signal / noise) : 35.0;
    total += std::clamp(snr, -10.0, 35.0);
    ++counted;
  }
  if (counted == 0)
    throw Error(ErrorKind::kContract, "segmental_snr: reference has no non-silent frames");
  return total / static_cast<double>(counted);
}

}  // namespace rsqa
