// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rsqa/model.hpp"
#include "rsqa/nn/layers.hpp"
#include "rsqa/random.hpp"
#include "rsqa/training.hpp"

namespace rsqa {

namespace {

using nn::Index;
using nn::Tensor;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

void fill_normal(Eigen::Ref<Vec> v, Rng& rng) {
  for (Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
}

Vec random_vector(Index n, Rng& rng) {
  Vec v(n);
  fill_normal(v, rng);
  return v;
}

// Compares `analytic` against central differences of f over every
// coordinate of `x`.
double compare_all(Eigen::Ref<Vec> x, const Vec& analytic, const std::function<double()>& f,
                   double eps) {
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f();
    x[i] = saved - eps;
    const double down = f();
    x[i] = saved;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

double gradcheck_conv2d(std::uint64_t seed, double eps) {
  Rng rng(seed);
  double worst = 0.0;
  for (Index stride : {Index{1}, Index{3}}) {
    Tensor<double> x({2, 4, 5}), w({3, 2, 3, 3}), b({3});
    fill_normal(x.data(), rng);
    fill_normal(w.data(), rng);
    fill_normal(b.data(), rng);
    const Index out_bins = nn::strided_length(5, stride);
    const Vec r = random_vector(3 * 4 * out_bins, rng);

    nn::Conv2dCache<double> cache;
    auto objective = [&] { return r.dot(nn::conv2d_forward(x, w, b, stride, cache).data()); };
    objective();
    Tensor<double> dy({3, 4, out_bins}, r);
    w.zero_grad();
    b.zero_grad();
    w.grad();
    b.grad();
    const Tensor<double> dx = nn::conv2d_backward(dy, w, b, cache);
    const Vec gw = w.grad(), gb = b.grad();
    worst = std::max(worst, compare_all(x.data(), dx.data(), objective, eps));
    worst = std::max(worst, compare_all(w.data(), gw, objective, eps));
    worst = std::max(worst, compare_all(b.data(), gb, objective, eps));
  }
  return worst;
}

double gradcheck_dense(std::uint64_t seed, double eps) {
  Rng rng(seed);
  const Index n = 6, m = 4, frames = 3;
  Mat x(n, frames);
  for (Index j = 0; j < frames; ++j) fill_normal(x.col(j), rng);
  Tensor<double> w({m, n}), b({m});
  fill_normal(w.data(), rng);
  fill_normal(b.data(), rng);
  Mat r(m, frames);
  for (Index j = 0; j < frames; ++j) fill_normal(r.col(j), rng);

  auto objective = [&] { return r.cwiseProduct(nn::dense_forward<double>(x, w, b)).sum(); };
  w.grad().setZero();
  b.grad().setZero();
  const Mat dx = nn::dense_backward<double>(r, x, w, b);
  const Vec gw = w.grad(), gb = b.grad();
  Eigen::Map<Vec> x_flat(x.data(), x.size());
  const Vec dx_flat = Eigen::Map<const Vec>(dx.data(), dx.size());
  double worst = compare_all(x_flat, dx_flat, objective, eps);
  worst = std::max(worst, compare_all(w.data(), gw, objective, eps));
  return std::max(worst, compare_all(b.data(), gb, objective, eps));
}

double gradcheck_relu(std::uint64_t seed, double eps) {
  Rng rng(seed);
  Tensor<double> x({2, 3, 4});
  for (Index i = 0; i < x.size(); ++i) {
    const double mag = rng.uniform(0.1 + 2 * eps, 2.0);
    x.data()[i] = rng.bernoulli(0.5) ? mag : -mag;
  }
  const Vec r = random_vector(x.size(), rng);
  auto objective = [&] { return r.dot(nn::relu_forward(x).data()); };
  const Tensor<double> y = nn::relu_forward(x);
  const Tensor<double> dx = nn::relu_backward(Tensor<double>(x.shape(), r), y);
  return compare_all(x.data(), dx.data(), objective, eps);
}

double gradcheck_dropout(std::uint64_t seed, double eps) {
  Rng rng(seed);
  Mat x(5, 4);
  for (Index j = 0; j < x.cols(); ++j) fill_normal(x.col(j), rng);
  std::mt19937_64 mask_rng(seed);
  const Mat mask = nn::dropout_mask<double>(x.rows(), x.cols(), 0.3, nn::Mode::kTrain, mask_rng);
  Mat r(5, 4);
  for (Index j = 0; j < r.cols(); ++j) fill_normal(r.col(j), rng);
  auto objective = [&] { return r.cwiseProduct(x.cwiseProduct(mask)).sum(); };
  const Mat dx = r.cwiseProduct(mask);
  Eigen::Map<Vec> x_flat(x.data(), x.size());
  return compare_all(x_flat, Eigen::Map<const Vec>(dx.data(), dx.size()), objective, eps);
}

double gradcheck_mean_pool(std::uint64_t seed, double eps) {
  Rng rng(seed);
  Vec scores = random_vector(7, rng);
  auto objective = [&] { return 3.0 * nn::mean_pool_time<double>(scores); };
  const Vec analytic = Vec::Constant(scores.size(), 3.0 / static_cast<double>(scores.size()));
  return compare_all(scores, analytic, objective, eps);
}

double gradcheck_mse(std::uint64_t seed, double eps) {
  Rng rng(seed);
  Vec pred = random_vector(6, rng);
  const Vec target = random_vector(6, rng);
  auto objective = [&] {
    return mse_loss(std::span<const double>(pred.data(), 6), std::span<const double>(target.data(), 6));
  };
  const auto g = mse_loss_grad(std::span<const double>(pred.data(), 6),
                               std::span<const double>(target.data(), 6));
  return compare_all(pred, Eigen::Map<const Vec>(g.data(), 6), objective, eps);
}

double gradcheck_model(std::uint64_t seed, double eps, int frames, int coordinates) {
  Rng rng(seed);
  ModelConfig cfg;
  QualityNet<double> net(cfg);
  net.init(rng.next());
  // Non-zero biases so that every bias coordinate is exercised.
  for (auto& t : net.params().tensors)
    if (t.rank() == 1)
      for (Index i = 0; i < t.size(); ++i) t.data()[i] = 0.1 * rng.normal();

  Tensor<double> input({cfg.input_channels, frames, cfg.input_bins});
  fill_normal(input.data(), rng);
  const double target = rng.uniform(1.0, 5.0);
  const std::uint64_t dropout_seed = rng.next();

  auto objective = [&] {
    std::mt19937_64 dropout(dropout_seed);
    const double err = net.forward(input, nn::Mode::kTrain, dropout) - target;
    return err * err;
  };
  {
    std::mt19937_64 dropout(dropout_seed);
    const double err = net.forward(input, nn::Mode::kTrain, dropout) - target;
    net.zero_grad();
    net.backward(2.0 * err);
  }

  auto& tensors = net.params().tensors;
  double worst = 0.0;
  for (int c = 0; c < coordinates; ++c) {
    auto& t = tensors[rng.below(tensors.size())];
    const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(t.size())));
    const double analytic = t.grad()[i];
    const double saved = t.data()[i];
    t.data()[i] = saved + eps;
    const double up = objective();
    t.data()[i] = saved - eps;
    const double down = objective();
    t.data()[i] = saved;
    // Below the rounding noise of the central difference the ratio is meaningless.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(up), std::abs(down)) / eps;
    worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * eps),
                                           std::max(1e-7, noise)));
  }
  return worst;
}

std::vector<GradCheckRow> run_gradcheck_suite(std::uint64_t seed, int seeds) {
  struct Entry {
    const char* name;
    double (*check)(std::uint64_t);
    double tolerance;
  };
  const Entry entries[] = {
      {"conv2d", [](std::uint64_t s) { return gradcheck_conv2d(s); }, 1e-4},
      {"relu", [](std::uint64_t s) { return gradcheck_relu(s); }, 1e-6},
      {"dense", [](std::uint64_t s) { return gradcheck_dense(s); }, 1e-6},
      {"dropout", [](std::uint64_t s) { return gradcheck_dropout(s); }, 1e-6},
      {"mean_pool_time", [](std::uint64_t s) { return gradcheck_mean_pool(s); }, 1e-6},
      {"mse_loss", [](std::uint64_t s) { return gradcheck_mse(s); }, 1e-6},
      {"model", [](std::uint64_t s) { return gradcheck_model(s); }, 1e-3},
  };
  std::vector<GradCheckRow> rows;
  for (const auto& e : entries) {
    GradCheckRow row{e.name, 0.0, e.tolerance, seeds};
    for (int k = 0; k < seeds; ++k)
      row.max_rel_error = std::max(row.max_rel_error, e.check(seed + static_cast<std::uint64_t>(k)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rsqa
