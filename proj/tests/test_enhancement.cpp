// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rsqa/degradation.hpp"
#include "rsqa/enhancement.hpp"
#include "rsqa/error.hpp"
#include "rsqa/random.hpp"
#include "test_util.hpp"

using namespace rsqa;

namespace {

AudioClip noise_clip(std::uint64_t seed, Eigen::Index n, double amp = 1.0) {
  Rng rng(seed);
  Eigen::ArrayXd x(n);
  for (auto& v : x) v = rng.uniform(-amp, amp);
  return AudioClip(x);
}

AudioClip sine(double hz, Eigen::Index n, double amp = 1.0) {
  Eigen::ArrayXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = amp * std::sin(2 * M_PI * hz * i / kSampleRate);
  return AudioClip(x);
}

double correlation(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  const Eigen::ArrayXd x = a - a.mean(), y = b - b.mean();
  return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

std::vector<double> vec(const AudioClip& c) {
  return {c.samples.data(), c.samples.data() + c.size()};
}

}  // namespace

TEST_CASE("spectral gate on a pure tone keeps its shape") {
  const AudioClip tone = sine(1000, 16000, 0.5);
  const AudioClip out = spectral_gate_enhance(tone);
  REQUIRE(out.size() == tone.size());
  CHECK(correlation(out.samples, tone.samples) >= 0.99);
}

TEST_CASE("spectral gate on silence is silent") {
  const AudioClip out = spectral_gate_enhance(AudioClip(Eigen::ArrayXd::Zero(4000)));
  CHECK(out.samples.abs().maxCoeff() == 0.0);
}

TEST_CASE("spectral gate follows the gain rule") {
  // Oracle: apply the documented per-bin rule to an stft and invert.
  const AudioClip x = noise_clip(8, 512 + 256 * 9 + 100);
  const SpectralGateParams p;
  ComplexSpectrogram spec = stft_complex(x);
  const Eigen::ArrayXXd mag = spec.values.abs();
  for (Eigen::Index k = 0; k < spec.bins(); ++k) {
    std::vector<double> col(mag.col(k).data(), mag.col(k).data() + mag.rows());
    std::sort(col.begin(), col.end());
    const double pos = p.noise_quantile * (col.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double floor = col[lo] + (pos - lo) * (col[std::min(lo + 1, col.size() - 1)] - col[lo]);
    for (Eigen::Index t = 0; t < spec.frames(); ++t)
      spec.values(t, k) *= std::max(p.gain_floor, 1.0 - p.oversubtraction * floor / mag(t, k));
  }
  const AudioClip expected = istft(spec);
  const AudioClip got = spectral_gate_enhance(x, p);
  REQUIRE(got.size() == x.size());
  const Eigen::Index covered = expected.size();
  CHECK((got.samples.head(covered) - expected.samples).abs().maxCoeff() < 1e-12);
  CHECK(got.samples.tail(x.size() - covered).abs().maxCoeff() == 0.0);
}

TEST_CASE("spectral gate improves segmental snr of tone bursts in white noise") {
  double gain = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const AudioClip clean = fixtures::tone_bursts(seed, 2.0);
    const AudioClip noisy = add_noise_snr(clean, NoiseKind::kWhite, 5.0, seed + 100);
    gain += segmental_snr(clean, spectral_gate_enhance(noisy)) - segmental_snr(clean, noisy);
  }
  CHECK(gain / 5 >= 3.0);
}

TEST_CASE("spectral gate helps speech-like clips in white noise") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const AudioClip clean = gen_clean(seed, 2.0);
    const AudioClip noisy = add_noise_snr(clean, NoiseKind::kWhite, 5.0, seed + 100);
    CHECK(segmental_snr(clean, spectral_gate_enhance(noisy)) > segmental_snr(clean, noisy));
  }
}

TEST_CASE("gate parameters are validated") {
  const AudioClip x = noise_clip(1, 1024);
  CHECK_THROWS_AS(spectral_gate_enhance(x, {0.0, 0.05, 0.1}), Error);
  CHECK_THROWS_AS(spectral_gate_enhance(x, {1.5, 1.0, 0.1}), Error);
  CHECK_THROWS_AS(spectral_gate_enhance(x, {1.5, 0.05, 0.0}), Error);
  CHECK_THROWS_AS(spectral_gate_enhance(AudioClip(x.samples.head(100))), Error);
}

TEST_CASE("external enhancement adapter") {
  testutil::TempDir dir("ext");
  const AudioClip x = noise_clip(2, 800, 0.5);
  write_wav(x, dir / "a_enh.wav");
  CorpusRecord with{"a.wav", 3.0, "a_enh.wav", ""};
  CHECK(external_enhanced(with, dir.path()).size() == 800);
  CorpusRecord without{"a.wav", 3.0, std::nullopt, ""};
  CHECK_THROWS_AS(external_enhanced(without, dir.path()), Error);

  std::vector<std::int16_t> pcm(4800, 1000);
  testutil::write_raw_wav(dir / "b_enh.wav", 1, 1, 48000, 16, testutil::pcm16_bytes(pcm));
  CorpusRecord hi{"b.wav", 3.0, "b_enh.wav", ""};
  CHECK(external_enhanced(hi, dir.path()).size() == 1600);
}

TEST_CASE("l2 loss") {
  Eigen::ArrayXd a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CHECK(loss_l2(AudioClip(a), AudioClip(b)) == 2.0);
  CHECK(loss_l2(AudioClip(a), AudioClip(a)) == 0.0);
  const AudioClip x = noise_clip(1, 100), y = noise_clip(2, 100);
  CHECK(loss_l2(AudioClip(3.0 * x.samples), AudioClip(3.0 * y.samples)) ==
        doctest::Approx(9.0 * loss_l2(x, y)));
  CHECK_THROWS_AS(loss_l2(x, AudioClip(y.samples.head(99))), Error);
}

TEST_CASE("perceptual loss matches a brute-force band oracle") {
  // Three frames: 512 + 2 * 256 samples.
  const Eigen::Index n = 1024;
  const AudioClip so = noise_clip(11, n, 0.3);
  const AudioClip st = sine(500, n, 0.4);
  const AudioClip sg = noise_clip(12, n, 0.2);

  CHECK(loss_perceptual(st, so, st) == 0.0);
  CHECK(loss_perceptual(so, so, so) == 0.0);

  const auto phi_t = oracle::band_phi(vec(st), vec(so), 512, 256, 8);
  const auto phi_g = oracle::band_phi(vec(sg), vec(so), 512, 256, 8);
  REQUIRE(phi_t.size() == 24);
  double sq_t = 0, sq_diff = 0;
  for (std::size_t i = 0; i < phi_t.size(); ++i) {
    sq_t += phi_t[i] * phi_t[i];
    sq_diff += (phi_t[i] - phi_g[i]) * (phi_t[i] - phi_g[i]);
  }
  // sg = so leaves only the target term.
  CHECK(loss_perceptual(so, so, st) == doctest::Approx(sq_t).epsilon(1e-9));
  CHECK(sq_t > 0);
  CHECK(loss_perceptual(sg, so, st) == doctest::Approx(sq_diff).epsilon(1e-9));
  // Symmetric under exchanging generated and target.
  CHECK(loss_perceptual(st, so, sg) == doctest::Approx(loss_perceptual(sg, so, st)).epsilon(1e-12));
}

TEST_CASE("generator objective is affine in alpha") {
  const AudioClip so = noise_clip(1, 2048, 0.5), st = sine(440, 2048, 0.5);
  const AudioClip sg(st.samples + 0.05 * noise_clip(2, 2048).samples);
  const auto r0 = generator_objective(sg, so, st, 0.0);
  CHECK(r0.total == r0.l2);
  const auto r1 = generator_objective(sg, so, st, 1.0);
  const auto r2 = generator_objective(sg, so, st, 2.0);
  CHECK(r2.total - r1.total == doctest::Approx(r1.perceptual));
  CHECK(generator_objective(st, so, st, 1.7).total == 0.0);
  CHECK_THROWS_AS(generator_objective(sg, so, st, -1.0), Error);
}

TEST_CASE("quality proxy") {
  const AudioClip ref = noise_clip(1, 3200, 0.5);
  CHECK(quality_score_proxy(ref, ref) == doctest::Approx(1 + 4 / (1 + std::exp(-6.25))));
  CHECK(quality_score_proxy(ref, ref) == doctest::Approx(4.9923).epsilon(1e-4));
  // Per-frame error power at one tenth of the signal gives exactly 10 dB.
  const AudioClip n = noise_clip(2, 3200);
  Eigen::ArrayXd test = ref.samples;
  for (int s = 0; s < 10; ++s) {
    const auto r = ref.samples.segment(s * 320, 320);
    const auto e = n.samples.segment(s * 320, 320);
    test.segment(s * 320, 320) += e * std::sqrt(0.1 * r.square().sum() / e.square().sum());
  }
  CHECK(quality_score_proxy(AudioClip(test), ref) == doctest::Approx(3.0).epsilon(1e-12));
  // Clamped floor at -10 dB.
  CHECK(quality_score_proxy(AudioClip(ref.samples + 20 * n.samples), ref) ==
        doctest::Approx(1 + 4 / (1 + std::exp(5.0))));
  CHECK(1 + 4 / (1 + std::exp(5.0)) == doctest::Approx(1.0268).epsilon(1e-4));
}

TEST_CASE("gated residual") {
  const AudioClip ref = gen_clean(4, 1.0);
  const AudioClip impaired = add_noise_snr(ref, NoiseKind::kWhite, 10.0, 5);
  SUBCASE("better enhancement keeps the residual") {
    const AudioClip enhanced(0.5 * (ref.samples + impaired.samples));
    CHECK_FALSE(residual_suppressed(impaired, enhanced, ref));
    const AudioClip r = gated_residual(impaired, enhanced, 0.0, ref);
    CHECK((r.samples - residual(impaired, enhanced).samples).abs().maxCoeff() == 0.0);
  }
  SUBCASE("noise output is suppressed") {
    const AudioClip junk = noise_clip(77, ref.size());
    CHECK(quality_score_proxy(junk, ref) < quality_score_proxy(impaired, ref));
    CHECK(gated_residual(impaired, junk, 0.0, ref).samples.abs().maxCoeff() == 0.0);
    // Without a reference the gate is bypassed.
    CHECK(gated_residual(impaired, junk).samples.isApprox(residual(impaired, junk).samples));
  }
  SUBCASE("margin widens the gate") {
    const AudioClip worse(impaired.samples + 0.02 * noise_clip(3, ref.size()).samples);
    const double drop = quality_score_proxy(impaired, ref) - quality_score_proxy(worse, ref);
    REQUIRE(drop > 0);
    CHECK(residual_suppressed(impaired, worse, ref, 0.0));
    CHECK_FALSE(residual_suppressed(impaired, worse, ref, drop * 1.01));
  }
}
