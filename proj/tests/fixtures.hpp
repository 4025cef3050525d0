// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>

#include "rsqa/audio_io.hpp"
#include "rsqa/random.hpp"

namespace fixtures {

// A sine at a seeded frequency switched on and off in 100-300 ms runs,
// starting with a pause. Amplitude 0.5.
inline rsqa::AudioClip tone_bursts(std::uint64_t seed, double duration_s) {
  rsqa::Rng rng(seed);
  const double hz = rng.uniform(200.0, 3000.0);
  const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
  const auto n = static_cast<Eigen::Index>(duration_s * rsqa::kSampleRate);
  Eigen::ArrayXd x = Eigen::ArrayXd::Zero(n);
  bool on = false;
  for (Eigen::Index i = 0; i < n;) {
    const auto run = static_cast<Eigen::Index>(rng.uniform(0.1, 0.3) * rsqa::kSampleRate);
    if (on)
      for (Eigen::Index j = i; j < std::min(n, i + run); ++j)
        x[j] = 0.5 * std::sin(2 * std::numbers::pi * hz * j / rsqa::kSampleRate + phase);
    on = !on;
    i += run;
  }
  return rsqa::AudioClip(x);
}

}  // namespace fixtures
