// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "rsqa/dsp.hpp"
#include "rsqa/error.hpp"
#include "rsqa/random.hpp"

namespace rsqa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Index to_samples(double seconds) {
  return static_cast<Eigen::Index>(std::llround(seconds * kSampleRate));
}

double formant_gain(double f, double f1, double f2) {
  const double a = (f - f1) / 150.0;
  const double b = (f - f2) / 250.0;
  return 0.15 + std::exp(-a * a) + 0.6 * std::exp(-b * b);
}

void add_voiced(Eigen::ArrayXd& out, Eigen::Index start, Eigen::Index length, Rng& rng) {
  const double f1 = rng.uniform(300.0, 900.0);
  const double f2 = rng.uniform(900.0, 2500.0);
  const double level = rng.uniform(0.5, 1.0);
  double f0 = rng.uniform(100.0, 200.0);
  double phase = 0.0;
  Eigen::ArrayXd amps;
  for (Eigen::Index i = 0; i < length && start + i < out.size(); ++i) {
    if (i % 80 == 0) {  // 5 ms pitch update
      f0 = std::clamp(f0 + 3.0 * rng.normal(), 80.0, 250.0);
      const int harmonics = static_cast<int>(7000.0 / f0);
      amps.resize(harmonics);
      for (int h = 0; h < harmonics; ++h)
        amps[h] = formant_gain((h + 1) * f0, f1, f2) / std::sqrt(h + 1.0);
    }
    phase = std::fmod(phase + kTwoPi * f0 / kSampleRate, kTwoPi);
    double v = 0.0;
    for (Eigen::Index h = 0; h < amps.size(); ++h)
      v += amps[h] * std::sin(static_cast<double>(h + 1) * phase);
    const double env = std::sin(std::numbers::pi * (i + 0.5) / length);
    out[start + i] += level * env * v;
  }
}

void add_unvoiced(Eigen::ArrayXd& out, Eigen::Index start, Eigen::Index length, Rng& rng) {
  const double level = rng.uniform(0.5, 1.5);
  double prev = 0.0;
  for (Eigen::Index i = 0; i < length && start + i < out.size(); ++i) {
    const double w = rng.normal();
    const double env = std::sin(std::numbers::pi * (i + 0.5) / length);
    out[start + i] += level * env * (w - prev);
    prev = w;
  }
}

Eigen::ArrayXd noise(Eigen::Index n, NoiseKind kind, Rng& rng) {
  Eigen::ArrayXd x(n);
  if (kind == NoiseKind::kWhite) {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
    return x;
  }
  // Paul Kellet's economy pink filter.
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    x[i] = b0 + b1 + b2 + w * 0.1848;
  }
  return x;
}

Eigen::ArrayXd fft_convolve(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  const Eigen::Index full = a.size() + b.size() - 1;
  Eigen::Index n = 1;
  while (n < full) n <<= 1;
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, pa);
  fft.fwd(fb, pb);
  for (Eigen::Index i = 0; i < n; ++i) fa[i] *= fb[i];
  std::vector<double> out;
  fft.inv(out, fa);
  Eigen::ArrayXd y(full);
  for (Eigen::Index i = 0; i < full; ++i) y[i] = out[i];
  return y;
}

int chain_stage(Degradation d) {
  switch (d) {
    case Degradation::kReverb: return 0;
    case Degradation::kWhiteNoise:
    case Degradation::kPinkNoise: return 1;
    case Degradation::kClipping: return 2;
    case Degradation::kPacketLoss: return 3;
  }
  return 4;
}

std::string clip_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d.wav", index);
  return buf;
}

}  // namespace

AudioClip gen_clean(std::uint64_t seed, double duration_s) {
  if (!(duration_s >= 0.5))
    throw Error(ErrorKind::kValidation, "gen_clean: duration must be >= 0.5 s");
  Rng rng(seed);
  const Eigen::Index n = to_samples(duration_s);
  Eigen::ArrayXd x = Eigen::ArrayXd::Zero(n);
  Eigen::Index pos = to_samples(rng.uniform(0.03, 0.12));
  while (pos < n) {
    if (rng.bernoulli(0.15)) {
      const Eigen::Index len = to_samples(rng.uniform(0.04, 0.10));
      add_unvoiced(x, pos, len, rng);
      pos += len;
    } else {
      const Eigen::Index len = to_samples(rng.uniform(0.12, 0.28));
      add_voiced(x, pos, len, rng);
      pos += len;
    }
    pos += to_samples(rng.uniform(0.06, 0.20));
  }
  const double peak = x.abs().maxCoeff();
  if (peak > 0.0) x *= kCleanPeak / peak;
  return AudioClip(std::move(x));
}

double active_power(const AudioClip& clip) {
  const Eigen::Index segments = clip.size() / kSegmentLength;
  double energy = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index s = 0; s < segments; ++s) {
    const double e = clip.samples.segment(s * kSegmentLength, kSegmentLength).square().sum();
    if (e <= kSilenceEnergy) continue;
    energy += e;
    count += kSegmentLength;
  }
  if (count == 0) throw Error(ErrorKind::kContract, "all-silent clip");
  return energy / static_cast<double>(count);
}

AudioClip add_noise_snr(const AudioClip& clip, NoiseKind kind, double snr_db,
                        std::uint64_t seed) {
  const double signal_power = active_power(clip);
  Rng rng(seed);
  const Eigen::ArrayXd n = noise(clip.size(), kind, rng);
  const double noise_power = n.square().mean();
  const double scale = std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
  return AudioClip((clip.samples + scale * n).cwiseMax(-1.0).cwiseMin(1.0), clip.sample_rate);
}

Eigen::ArrayXd synthetic_rir(double t60_s, std::uint64_t seed) {
  if (!(t60_s >= 0.1 && t60_s <= 1.5))
    throw Error(ErrorKind::kValidation, "t60 must be in [0.1, 1.5] s");
  Rng rng(seed);
  const Eigen::Index length = to_samples(1.5 * t60_s);
  const double decay = std::log(1000.0) / t60_s;
  Eigen::ArrayXd h(length);
  h[0] = 1.0;
  for (Eigen::Index i = 1; i < length; ++i)
    h[i] = kReverbTailGain * rng.normal() * std::exp(-decay * i / kSampleRate);
  return h;
}

AudioClip add_reverb(const AudioClip& clip, double t60_s, std::uint64_t seed) {
  const Eigen::ArrayXd h = synthetic_rir(t60_s, seed);
  Eigen::ArrayXd y = fft_convolve(clip.samples, h).head(clip.size());
  const double in_peak = clip.samples.abs().maxCoeff();
  const double out_peak = y.abs().maxCoeff();
  if (out_peak > 0.0) y *= in_peak / out_peak;
  return AudioClip(std::move(y), clip.sample_rate);
}

std::vector<bool> packet_loss_pattern(Eigen::Index samples, double loss_rate,
                                      std::uint64_t seed) {
  if (!(loss_rate >= 0.0 && loss_rate < 1.0))
    throw Error(ErrorKind::kValidation, "loss_rate must be in [0, 1)");
  Rng rng(seed);
  const Eigen::Index frames = (samples + kSegmentLength - 1) / kSegmentLength;
  std::vector<bool> lost(static_cast<std::size_t>(frames));
  for (auto&& f : lost) f = rng.bernoulli(loss_rate);
  return lost;
}

AudioClip packet_loss(const AudioClip& clip, double loss_rate, std::uint64_t seed) {
  const auto lost = packet_loss_pattern(clip.size(), loss_rate, seed);
  const Eigen::Index n = clip.size();
  constexpr Eigen::Index kFade = 32;  // 2 ms
  Eigen::ArrayXd gain(n);
  for (Eigen::Index i = 0; i < n; ++i) gain[i] = lost[i / kSegmentLength] ? 0.0 : 1.0;
  // Linear ramps inside kept audio adjacent to a lost frame.
  for (std::size_t f = 0; f < lost.size(); ++f) {
    if (lost[f]) continue;
    const Eigen::Index begin = static_cast<Eigen::Index>(f) * kSegmentLength;
    const Eigen::Index end = std::min(n, begin + kSegmentLength);
    if (f > 0 && lost[f - 1])
      for (Eigen::Index i = 0; i < kFade && begin + i < end; ++i)
        gain[begin + i] = std::min(gain[begin + i], (i + 1.0) / (kFade + 1.0));
    if (f + 1 < lost.size() && lost[f + 1])
      for (Eigen::Index i = 0; i < kFade && end - 1 - i >= begin; ++i)
        gain[end - 1 - i] = std::min(gain[end - 1 - i], (i + 1.0) / (kFade + 1.0));
  }
  return AudioClip(clip.samples * gain, clip.sample_rate);
}

AudioClip clip_distortion(const AudioClip& clip, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorKind::kValidation, "clip threshold must be in (0, 1]");
  return AudioClip(clip.samples.cwiseMax(-threshold).cwiseMin(threshold) / threshold,
                   clip.sample_rate);
}

double pseudo_mos(const AudioClip& clean, const AudioClip& degraded) {
  const double snr = segmental_snr(clean, degraded);
  return 1.0 + 4.0 / (1.0 + std::exp(-0.22 * (snr - 8.0)));
}

std::string condition_name(Degradation d) {
  switch (d) {
    case Degradation::kWhiteNoise: return "noise_white";
    case Degradation::kPinkNoise: return "noise_pink";
    case Degradation::kReverb: return "reverb";
    case Degradation::kPacketLoss: return "packet_loss";
    case Degradation::kClipping: return "clipping";
  }
  return "unknown";
}

std::vector<ConditionSpec> default_condition_mix() {
  return {
      {Degradation::kWhiteNoise, -5.0, 25.0, 1.0},
      {Degradation::kPinkNoise, -5.0, 25.0, 1.0},
      {Degradation::kReverb, 0.2, 1.2, 1.0},
      {Degradation::kPacketLoss, 0.1, 0.6, 0.5},
      {Degradation::kClipping, 0.05, 0.45, 0.5},
  };
}

AudioClip apply_degradation(const AudioClip& clip, Degradation kind, double parameter,
                            std::uint64_t seed) {
  switch (kind) {
    case Degradation::kWhiteNoise: return add_noise_snr(clip, NoiseKind::kWhite, parameter, seed);
    case Degradation::kPinkNoise: return add_noise_snr(clip, NoiseKind::kPink, parameter, seed);
    case Degradation::kReverb: return add_reverb(clip, parameter, seed);
    case Degradation::kPacketLoss: return packet_loss(clip, parameter, seed);
    case Degradation::kClipping: return clip_distortion(clip, parameter);
  }
  throw Error(ErrorKind::kContract, "unknown degradation");
}

void CorpusConfig::validate() const {
  if (n_clips < 1) throw Error(ErrorKind::kValidation, "n_clips must be >= 1");
  if (!(duration_s >= 0.5)) throw Error(ErrorKind::kValidation, "duration must be >= 0.5 s");
  if (mix.empty()) throw Error(ErrorKind::kValidation, "condition mix is empty");
  for (const auto& c : mix)
    if (!(c.weight > 0.0)) throw Error(ErrorKind::kValidation, "condition weights must be > 0");
  if (!(chain_probability >= 0.0 && chain_probability <= 1.0))
    throw Error(ErrorKind::kValidation, "chain_probability must be in [0, 1]");
}

Manifest build_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir / "clean", ec);
  fs::create_directories(cfg.out_dir / "degraded", ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + cfg.out_dir.string() + ": " + ec.message());

  double total_weight = 0.0;
  for (const auto& c : cfg.mix) total_weight += c.weight;
  auto pick = [&](Rng& rng, int exclude) {
    double excluded = exclude >= 0 ? cfg.mix[exclude].weight : 0.0;
    double u = rng.uniform() * (total_weight - excluded);
    for (std::size_t i = 0; i < cfg.mix.size(); ++i) {
      if (static_cast<int>(i) == exclude) continue;
      if (u < cfg.mix[i].weight) return static_cast<int>(i);
      u -= cfg.mix[i].weight;
    }
    for (int i = static_cast<int>(cfg.mix.size()) - 1; i >= 0; --i)
      if (i != exclude) return i;
    return 0;
  };

  Manifest manifest;
  manifest.root_dir = cfg.out_dir;
  std::ofstream refs(cfg.out_dir / "clean_ref.csv", std::ios::trunc);
  if (!refs) throw Error(ErrorKind::kIo, "cannot write clean_ref.csv in " + cfg.out_dir.string());
  refs << "degraded_path,clean_path\n";

  for (int i = 0; i < cfg.n_clips; ++i) {
    const std::uint64_t clip_seed = cfg.seed ^ splitmix64(static_cast<std::uint64_t>(i));
    Rng rng(clip_seed);
    const AudioClip clean = quantize_pcm16(gen_clean(rng.next(), cfg.duration_s));

    std::vector<int> chain{pick(rng, -1)};
    if (cfg.mix.size() > 1 && rng.bernoulli(cfg.chain_probability))
      chain.push_back(pick(rng, chain.front()));
    // Room, then additive noise, then device clipping, then the network.
    std::stable_sort(chain.begin(), chain.end(), [&](int a, int b) {
      return chain_stage(cfg.mix[a].kind) < chain_stage(cfg.mix[b].kind);
    });

    AudioClip degraded = clean;
    std::string tag;
    for (int c : chain) {
      const ConditionSpec& spec = cfg.mix[c];
      const double parameter = rng.uniform(spec.lo, spec.hi);
      degraded = apply_degradation(degraded, spec.kind, parameter, rng.next());
      tag += (tag.empty() ? "" : "+") + condition_name(spec.kind);
    }
    degraded = quantize_pcm16(degraded);

    const std::string name = clip_name(i);
    write_wav(clean, cfg.out_dir / "clean" / name);
    write_wav(degraded, cfg.out_dir / "degraded" / name);
    CorpusRecord record;
    record.clip_path = "degraded/" + name;
    // Rounded to the precision written to manifest.csv.
    record.mos = std::round(pseudo_mos(clean, degraded) * 1e4) / 1e4;
    record.condition_tag = tag;
    manifest.records.push_back(record);
    refs << record.clip_path << ",clean/" << name << '\n';
  }
  if (!refs) throw Error(ErrorKind::kIo, "write failed: clean_ref.csv");
  save_manifest(manifest, cfg.out_dir / "manifest.csv");
  return manifest;
}

}  // namespace rsqa
