// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rsqa {

/// sqrt(mean((x - y)^2)). Throws on length mismatch or empty input.
double rmse(std::span<const double> x, std::span<const double> y);

/// Pearson correlation. Throws kValidation "zero variance" for constant input.
double pcc(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

/// Spearman correlation: Pearson correlation of the average ranks.
double srcc(std::span<const double> x, std::span<const double> y);

struct EvalRow {
  std::string clip_path;
  double true_mos = 0.0;
  double predicted_mos = 0.0;
  std::string condition_tag;
};

/// A metric either has a value or the reason it could not be computed.
struct MetricValue {
  std::optional<double> value;
  std::string error;
};

struct Aggregate {
  std::size_t count = 0;
  MetricValue rmse, pcc, srcc;
};

/// Computes all three metrics over rows, recording per-metric failures.
Aggregate aggregate_rows(std::span<const EvalRow> rows);

struct EvalReport {
  std::vector<EvalRow> rows;
  Aggregate aggregate;
  std::map<std::string, Aggregate> by_condition;

  /// Recomputes aggregate and by_condition from rows.
  void recompute();

  /// `{rows: [...], aggregate: {...}, by_condition: {...}}`
  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
};

inline constexpr int kHistogramBins = 20;

/// Writes scatter.csv (true_mos,predicted_mos) and hist.csv
/// (bin_center,count_true,count_pred over 20 uniform bins on [1, 5]).
void emit_plot_data(const EvalReport& report, const std::filesystem::path& out_dir);

/// Bin index in [0, 20) for a MOS value; values outside [1, 5] go to the
/// nearest edge bin.
int histogram_bin(double mos);

}  // namespace rsqa
