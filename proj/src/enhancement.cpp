// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/enhancement.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rsqa/error.hpp"

namespace rsqa {

namespace {

void require_aligned(const AudioClip& a, const AudioClip& b, const char* what) {
  if (a.size() != b.size() || a.sample_rate != b.sample_rate)
    throw Error(ErrorKind::kShape, std::string(what) + ": clips are not aligned (" +
                                       std::to_string(a.size()) + " vs " +
                                       std::to_string(b.size()) + " samples)");
}

// Linear-interpolated quantile of an unsorted sample (q in [0, 1]).
double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

AudioClip head(const AudioClip& clip, Eigen::Index n) {
  return AudioClip(clip.samples.head(n), clip.sample_rate);
}

}  // namespace

void SpectralGateParams::validate() const {
  if (!(oversubtraction > 0.0))
    throw Error(ErrorKind::kValidation, "oversubtraction must be > 0");
  if (!(gain_floor >= 0.0 && gain_floor < 1.0))
    throw Error(ErrorKind::kValidation, "gain_floor must be in [0, 1)");
  if (!(noise_quantile > 0.0 && noise_quantile < 1.0))
    throw Error(ErrorKind::kValidation, "noise_quantile must be in (0, 1)");
}

AudioClip spectral_gate_enhance(const AudioClip& clip, const SpectralGateParams& params,
                                const StftConfig& cfg) {
  params.validate();
  cfg.validate();
  if (clip.size() < cfg.fft_size)
    throw Error(ErrorKind::kContract, "clip too short: " + std::to_string(clip.size()) +
                                          " samples, need at least " +
                                          std::to_string(cfg.fft_size));
  ComplexSpectrogram spec = stft_complex(clip, cfg);
  const Eigen::ArrayXXd mag = spec.values.abs();
  const Eigen::Index frames = spec.frames();
  std::vector<double> column(static_cast<std::size_t>(frames));
  for (Eigen::Index k = 0; k < spec.bins(); ++k) {
    for (Eigen::Index f = 0; f < frames; ++f) column[f] = mag(f, k);
    const double noise = quantile(column, params.noise_quantile);
    for (Eigen::Index f = 0; f < frames; ++f) {
      const double m = mag(f, k);
      const double gain =
          m > 0.0 ? std::max(params.gain_floor, 1.0 - params.oversubtraction * noise / m)
                  : params.gain_floor;
      spec.values(f, k) *= gain;
    }
  }
  // Samples past the last full frame are not reconstructed and stay zero.
  AudioClip out(Eigen::ArrayXd::Zero(clip.size()), clip.sample_rate);
  const AudioClip full = istft(spec);
  const Eigen::Index n = std::min(full.size(), clip.size());
  out.samples.head(n) = full.samples.head(n);
  return out;
}

AudioClip external_enhanced(const CorpusRecord& record,
                            const std::filesystem::path& root) {
  if (!record.enhanced_path)
    throw Error(ErrorKind::kContract,
                "no external enhancement for " + record.clip_path);
  return read_wav(root / *record.enhanced_path);
}

double loss_l2(const AudioClip& generated, const AudioClip& target) {
  require_aligned(generated, target, "loss_l2");
  return (generated.samples - target.samples).square().sum();
}

Eigen::ArrayXXd band_log_energy_difference(const AudioClip& a, const AudioClip& b,
                                           const StftConfig& cfg) {
  require_aligned(a, b, "band_log_energy_difference");
  const Eigen::ArrayXXd pa = magnitude(stft_complex(a, cfg)).values.square();
  const Eigen::ArrayXXd pb = magnitude(stft_complex(b, cfg)).values.square();
  const Eigen::Index bins = pa.cols();
  Eigen::ArrayXXd phi(pa.rows(), kPerceptualBands);
  for (int band = 0; band < kPerceptualBands; ++band) {
    const Eigen::Index lo = band * bins / kPerceptualBands;
    const Eigen::Index hi = (band + 1) * bins / kPerceptualBands;
    const Eigen::ArrayXd ea = pa.middleCols(lo, hi - lo).rowwise().sum();
    const Eigen::ArrayXd eb = pb.middleCols(lo, hi - lo).rowwise().sum();
    phi.col(band) = (ea + kLogFloor).log() - (eb + kLogFloor).log();
  }
  return phi;
}

double loss_perceptual(const AudioClip& generated, const AudioClip& impaired,
                       const AudioClip& target, const StftConfig& cfg) {
  require_aligned(generated, impaired, "loss_perceptual");
  require_aligned(target, impaired, "loss_perceptual");
  return (band_log_energy_difference(target, impaired, cfg) -
          band_log_energy_difference(generated, impaired, cfg))
      .square()
      .sum();
}

GeneratorLossReport generator_objective(const AudioClip& generated,
                                        const AudioClip& impaired,
                                        const AudioClip& target, double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorKind::kValidation, "alpha must be >= 0");
  GeneratorLossReport r;
  r.alpha = alpha;
  r.l2 = loss_l2(generated, target);
  r.perceptual = loss_perceptual(generated, impaired, target);
  r.total = r.l2 + alpha * r.perceptual;
  return r;
}

double quality_score_proxy(const AudioClip& clip, const AudioClip& reference) {
  const double snr = segmental_snr(reference, clip);
  return 1.0 + 4.0 / (1.0 + std::exp(-0.25 * (snr - 10.0)));
}

bool residual_suppressed(const AudioClip& impaired, const AudioClip& enhanced,
                         const AudioClip& reference, double margin) {
  const Eigen::Index n =
      std::min({impaired.size(), enhanced.size(), reference.size()});
  const AudioClip ref = head(reference, n);
  return quality_score_proxy(head(enhanced, n), ref) <
         quality_score_proxy(head(impaired, n), ref) - margin;
}

AudioClip gated_residual(const AudioClip& impaired, const AudioClip& enhanced,
                         double margin, const std::optional<AudioClip>& reference) {
  AudioClip r = residual(impaired, enhanced);
  if (reference && residual_suppressed(impaired, enhanced, *reference, margin))
    r.samples.setZero();
  return r;
}

}  // namespace rsqa
