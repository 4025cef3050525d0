// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rsqa {

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-8);

// Each check runs in double precision against central differences
// (f(x + eps) - f(x - eps)) / 2eps and returns the maximum relative error
// over the checked coordinates. Layer checks use the scalar objective
// sum(r * y) with a random projection r.

/// C_in = 2, T = 4, F = 5, C_out = 3, frequency strides 1 and 3; all
/// coordinates of input, weight and bias.
double gradcheck_conv2d(std::uint64_t seed, double eps = 1e-4);
double gradcheck_dense(std::uint64_t seed, double eps = 1e-4);
/// Inputs drawn with |x| > 0.1 so that no difference straddles the kink.
double gradcheck_relu(std::uint64_t seed, double eps = 1e-4);
/// Training-mode dropout with a fixed mask.
double gradcheck_dropout(std::uint64_t seed, double eps = 1e-4);
double gradcheck_mean_pool(std::uint64_t seed, double eps = 1e-4);
double gradcheck_mse(std::uint64_t seed, double eps = 1e-4);
/// Squared error of the full regressor on a 2 x frames x 257 input w.r.t.
/// `coordinates` randomly chosen parameters.
double gradcheck_model(std::uint64_t seed, double eps = 1e-6, int frames = 8,
                       int coordinates = 10);

struct GradCheckRow {
  std::string layer;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  int seeds = 0;

  bool pass() const noexcept { return max_rel_error < tolerance; }
};

/// One row per layer type, maximum over `seeds` consecutive seeds.
std::vector<GradCheckRow> run_gradcheck_suite(std::uint64_t seed, int seeds = 20);

}  // namespace rsqa
