// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <json.hpp>

#include "rsqa/error.hpp"

namespace rsqa {

namespace {

void require_paired(std::span<const double> x, std::span<const double> y,
                    std::size_t min_len, const char* what) {
  if (x.size() != y.size())
    throw Error(ErrorKind::kShape, std::string(what) + ": length mismatch (" +
                                       std::to_string(x.size()) + " vs " +
                                       std::to_string(y.size()) + ")");
  if (x.size() < min_len)
    throw Error(ErrorKind::kContract, std::string(what) + ": needs at least " +
                                          std::to_string(min_len) + " values");
}

double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

MetricValue guarded(double (*metric)(std::span<const double>, std::span<const double>),
                    std::span<const double> x, std::span<const double> y) {
  MetricValue m;
  try {
    m.value = metric(x, y);
  } catch (const Error& e) {
    m.error = e.what();
  }
  return m;
}

nlohmann::json metric_json(const MetricValue& m) {
  return m.value ? nlohmann::json(*m.value) : nlohmann::json(nullptr);
}

nlohmann::json aggregate_json(const Aggregate& a) {
  nlohmann::json j = {{"count", a.count},
                      {"rmse", metric_json(a.rmse)},
                      {"pcc", metric_json(a.pcc)},
                      {"srcc", metric_json(a.srcc)}};
  nlohmann::json errors = nlohmann::json::object();
  if (!a.rmse.error.empty()) errors["rmse"] = a.rmse.error;
  if (!a.pcc.error.empty()) errors["pcc"] = a.pcc.error;
  if (!a.srcc.error.empty()) errors["srcc"] = a.srcc.error;
  if (!errors.empty()) j["errors"] = errors;
  return j;
}

MetricValue metric_from_json(const nlohmann::json& a, const char* key) {
  MetricValue m;
  if (a.contains(key) && !a[key].is_null()) m.value = a[key].get<double>();
  if (a.contains("errors") && a["errors"].contains(key))
    m.error = a["errors"][key].get<std::string>();
  return m;
}

Aggregate aggregate_from_json(const nlohmann::json& a) {
  Aggregate out;
  out.count = a.at("count").get<std::size_t>();
  out.rmse = metric_from_json(a, "rmse");
  out.pcc = metric_from_json(a, "pcc");
  out.srcc = metric_from_json(a, "srcc");
  return out;
}

}  // namespace

double rmse(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, 1, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double pcc(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, 2, "pcc");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::kValidation, "zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, 2, "srcc");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pcc(rx, ry);
}

Aggregate aggregate_rows(std::span<const EvalRow> rows) {
  std::vector<double> t, p;
  for (const auto& r : rows) {
    t.push_back(r.true_mos);
    p.push_back(r.predicted_mos);
  }
  Aggregate a;
  a.count = rows.size();
  a.rmse = guarded(&rmse, t, p);
  a.pcc = guarded(&pcc, t, p);
  a.srcc = guarded(&srcc, t, p);
  return a;
}

void EvalReport::recompute() {
  aggregate = aggregate_rows(rows);
  by_condition.clear();
  std::map<std::string, std::vector<EvalRow>> groups;
  for (const auto& r : rows) groups[r.condition_tag].push_back(r);
  for (const auto& [tag, group] : groups) by_condition[tag] = aggregate_rows(group);
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"clip_path", r.clip_path},
                         {"true_mos", r.true_mos},
                         {"predicted_mos", r.predicted_mos},
                         {"condition_tag", r.condition_tag}});
  j["aggregate"] = aggregate_json(aggregate);
  j["by_condition"] = nlohmann::json::object();
  for (const auto& [tag, a] : by_condition) j["by_condition"][tag] = aggregate_json(a);
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  EvalReport report;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& r : j.at("rows"))
      report.rows.push_back({r.at("clip_path").get<std::string>(),
                             r.at("true_mos").get<double>(),
                             r.at("predicted_mos").get<double>(),
                             r.at("condition_tag").get<std::string>()});
    report.aggregate = aggregate_from_json(j.at("aggregate"));
    for (const auto& [tag, a] : j.at("by_condition").items())
      report.by_condition[tag] = aggregate_from_json(a);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed report: ") + e.what());
  }
  return report;
}

void EvalReport::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << to_json() << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

int histogram_bin(double mos) {
  const int bin = static_cast<int>(std::floor((mos - 1.0) * kHistogramBins / 4.0));
  return std::clamp(bin, 0, kHistogramBins - 1);
}

void emit_plot_data(const EvalReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream scatter(out_dir / "scatter.csv", std::ios::trunc);
  std::ofstream hist(out_dir / "hist.csv", std::ios::trunc);
  if (!scatter || !hist)
    throw Error(ErrorKind::kIo, "cannot write plot data to " + out_dir.string());

  scatter.precision(10);
  scatter << "true_mos,predicted_mos\n";
  std::vector<int> count_true(kHistogramBins, 0), count_pred(kHistogramBins, 0);
  for (const auto& r : report.rows) {
    scatter << r.true_mos << ',' << r.predicted_mos << '\n';
    ++count_true[histogram_bin(r.true_mos)];
    ++count_pred[histogram_bin(r.predicted_mos)];
  }
  hist << "bin_center,count_true,count_pred\n";
  const double width = 4.0 / kHistogramBins;
  for (int b = 0; b < kHistogramBins; ++b)
    hist << 1.0 + (b + 0.5) * width << ',' << count_true[b] << ',' << count_pred[b] << '\n';
  if (!scatter || !hist)
    throw Error(ErrorKind::kIo, "write failed in " + out_dir.string());
}

}  // namespace rsqa
