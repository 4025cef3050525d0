// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/pipeline.hpp"

#include "rsqa/error.hpp"

namespace rsqa {

std::string to_string(EnhancerKind kind) {
  switch (kind) {
    case EnhancerKind::kSpectralGate: return "spectral-gate";
    case EnhancerKind::kExternal: return "external";
    case EnhancerKind::kNone: return "none";
  }
  return "none";
}

EnhancerKind parse_enhancer(const std::string& name) {
  if (name == "spectral-gate") return EnhancerKind::kSpectralGate;
  if (name == "external") return EnhancerKind::kExternal;
  if (name == "none") return EnhancerKind::kNone;
  throw Error(ErrorKind::kValidation, "unknown enhancer '" + name +
                                          "' (expected spectral-gate, external or none)");
}

FeatureTensor extract_features(const AudioClip& impaired, const PipelineConfig& cfg,
                               const std::optional<AudioClip>& reference,
                               const std::optional<AudioClip>& external) {
  if (!cfg.residual_enabled()) {
    FeatureTensor f = assemble_features(impaired, AudioClip(Eigen::ArrayXd::Zero(impaired.size())),
                                        cfg.stft);
    f.values.row(1).setZero();
    return f;
  }
  AudioClip enhanced;
  if (cfg.enhancer == EnhancerKind::kSpectralGate) {
    enhanced = spectral_gate_enhance(impaired, cfg.gate, cfg.stft);
  } else {
    if (!external) throw Error(ErrorKind::kContract, "no external enhancement supplied");
    enhanced = *external;
  }
  const AudioClip resid = gated_residual(impaired, enhanced, cfg.gate_margin, reference);
  const AudioClip aligned(impaired.samples.head(resid.size()), impaired.sample_rate);
  return assemble_features(aligned, resid, cfg.stft);
}

std::vector<FeatureTensor> extract_manifest_features(const Manifest& manifest,
                                                     const PipelineConfig& cfg) {
  std::map<std::string, std::string> clean_of;
  for (auto& [degraded, clean] : load_clean_refs(manifest.root_dir / "clean_ref.csv"))
    clean_of.emplace(degraded, clean);

  std::vector<FeatureTensor> out;
  out.reserve(manifest.records.size());
  for (const auto& record : manifest.records) {
    const AudioClip impaired = read_wav(manifest.resolve(record.clip_path));
    std::optional<AudioClip> reference, external;
    if (cfg.residual_enabled()) {
      if (auto it = clean_of.find(record.clip_path); it != clean_of.end())
        reference = read_wav(manifest.resolve(it->second));
      if (cfg.enhancer == EnhancerKind::kExternal)
        external = external_enhanced(record, manifest.root_dir);
    }
    out.push_back(extract_features(impaired, cfg, reference, external));
  }
  return out;
}

}  // namespace rsqa
