// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "rsqa/degradation.hpp"
#include "rsqa/error.hpp"
#include "rsqa/gradcheck.hpp"
#include "rsqa/metrics.hpp"
#include "rsqa/run_config.hpp"
#include "rsqa/training.hpp"

namespace rsqa {

namespace {

namespace fs = std::filesystem;

// Thrown for configuration mistakes detected after CLI parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string metric(const MetricValue& m) { return m.value ? fixed(*m.value, 6) : "nan"; }

struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string enhancer;
  bool no_residual = false;

  RunConfig resolve() const {
    RunConfig cfg;
    try {
      if (!config_path.empty()) cfg.load_file(config_path);
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!enhancer.empty()) cfg.pipeline.enhancer = parse_enhancer(enhancer);
      if (no_residual) cfg.pipeline.use_residual = false;
      cfg.validate();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kIo) throw;
      throw UsageError(e.what());
    }
    return cfg;
  }
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config with flat dotted keys")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", flags.overrides, "Override a config key (key=value), repeatable");
}

const std::vector<std::string> kEnhancers = {"spectral-gate", "external", "none"};

int cmd_synth(const fs::path& out_dir, int count, std::uint64_t seed, double duration,
              std::ostream& out) {
  CorpusConfig cfg;
  cfg.out_dir = out_dir;
  cfg.n_clips = count;
  cfg.seed = seed;
  cfg.duration_s = duration;
  const Manifest m = build_corpus(cfg);
  double mean = 0.0;
  for (const auto& r : m.records) mean += r.mos;
  mean /= static_cast<double>(m.records.size());
  double var = 0.0;
  for (const auto& r : m.records) var += (r.mos - mean) * (r.mos - mean);
  var /= static_cast<double>(m.records.size());
  out << (out_dir / "manifest.csv").string() << '\n'
      << "count=" << m.records.size() << " mean=" << fixed(mean, 4)
      << " std=" << fixed(std::sqrt(var), 4) << '\n';
  return kExitOk;
}

int cmd_train(const fs::path& manifest_path, const fs::path& ckpt_path, const ConfigFlags& flags,
              std::ostream& out, std::ostream& err) {
  const RunConfig cfg = flags.resolve();
  const Manifest manifest = load_manifest(manifest_path);
  TrainOutputs outputs;
  outputs.checkpoint = ckpt_path;
  outputs.log_csv = ckpt_path.parent_path() / "train_log.csv";
  outputs.on_epoch = [&err](const EpochLog& e) {
    err << "epoch " << e.epoch << " train_loss=" << fixed(e.train_loss, 5)
        << " val_rmse=" << fixed(e.val_rmse, 5) << " val_pcc=" << fixed(e.val_pcc, 4)
        << " val_srcc=" << fixed(e.val_srcc, 4) << '\n';
  };
  const TrainResult result = train(manifest, cfg.pipeline, cfg.train, cfg.model, outputs);
  out << "checkpoint=" << ckpt_path.string() << " best_epoch=" << result.checkpoint.epoch
      << " best_val_rmse=" << fixed(result.checkpoint.best_val_rmse, 6) << '\n';
  return kExitOk;
}

int cmd_eval(const fs::path& manifest_path, const fs::path& ckpt_path, const fs::path& report_path,
             const std::string& plots_dir, const std::string& enhancer, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Manifest manifest = load_manifest(manifest_path);
  std::optional<EnhancerKind> override_kind;
  if (!enhancer.empty()) override_kind = parse_enhancer(enhancer);
  const EvalReport report = evaluate(manifest, ckpt, override_kind);
  report.save(report_path);
  if (!plots_dir.empty()) emit_plot_data(report, plots_dir);
  out << "RMSE=" << metric(report.aggregate.rmse) << " PCC=" << metric(report.aggregate.pcc)
      << " SRCC=" << metric(report.aggregate.srcc) << '\n';
  return kExitOk;
}

int cmd_predict(const fs::path& wav, const fs::path& ckpt_path, const std::string& enhancer,
                const std::string& enhanced_wav, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  PipelineConfig pipeline = ckpt.pipeline;
  if (!enhancer.empty()) pipeline.enhancer = parse_enhancer(enhancer);
  const AudioClip clip = read_wav(wav);
  std::optional<AudioClip> external;
  if (pipeline.residual_enabled() && pipeline.enhancer == EnhancerKind::kExternal) {
    if (enhanced_wav.empty())
      throw Error(ErrorKind::kContract, "no external enhancement: pass --enhanced");
    external = read_wav(enhanced_wav);
  }
  const FeatureTensor features = extract_features(clip, pipeline, std::nullopt, external);
  QualityNet<float> net = make_model(ckpt);
  out << fixed(static_cast<double>(net.predict(features)), 3) << '\n';
  return kExitOk;
}

int cmd_enhance(const fs::path& wav, const fs::path& out_path, const ConfigFlags& flags,
                std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  const AudioClip clip = read_wav(wav);
  const AudioClip enhanced = spectral_gate_enhance(clip, cfg.pipeline.gate, cfg.pipeline.stft);
  write_wav(enhanced, out_path);
  out << out_path.string() << '\n';
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, int seeds, std::ostream& out) {
  const auto rows = run_gradcheck_suite(seed, seeds);
  bool ok = true;
  char line[128];
  std::snprintf(line, sizeof line, "%-16s %14s %10s %6s %s\n", "layer", "max_rel_error",
                "tolerance", "seeds", "status");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %14.3e %10.0e %6d %s\n", r.layer.c_str(),
                  r.max_rel_error, r.tolerance, r.seeds, r.pass() ? "PASS" : "FAIL");
    out << line;
    ok = ok && r.pass();
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual-guided non-intrusive speech quality assessment", "rsqa"};
  app.require_subcommand(1);

  std::string out_dir;
  int count = 0;
  std::uint64_t seed = 0;
  double duration = 3.0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic degraded corpus");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--count", count, "Number of clips")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "Corpus seed")->required();
  synth->add_option("--duration", duration, "Clip duration in seconds")
      ->check(CLI::Range(0.5, 600.0));

  std::string manifest, ckpt;
  ConfigFlags flags;
  auto* train_cmd = app.add_subcommand("train", "Train the MOS regressor");
  train_cmd->add_option("--manifest", manifest, "Training manifest CSV")->required();
  train_cmd->add_option("--out", ckpt, "Checkpoint path")->required();
  add_config_flags(train_cmd, flags);
  train_cmd->add_option("--enhancer", flags.enhancer, "spectral-gate, external or none")
      ->check(CLI::IsMember(kEnhancers));
  train_cmd->add_flag("--no-residual", flags.no_residual, "Ablation: zero residual channel");

  std::string report, plots, enhancer;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  eval_cmd->add_option("--manifest", manifest, "Manifest CSV")->required();
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--report", report, "Report JSON output")->required();
  eval_cmd->add_option("--plots", plots, "Directory for scatter.csv and hist.csv");
  eval_cmd->add_option("--enhancer", enhancer, "Override the checkpoint's enhancer")
      ->check(CLI::IsMember(kEnhancers));

  std::string wav, enhanced_wav;
  auto* predict = app.add_subcommand("predict", "Predict the MOS of one WAV file");
  predict->add_option("--wav", wav, "Input WAV")->required();
  predict->add_option("--ckpt", ckpt, "Checkpoint")->required();
  predict->add_option("--enhancer", enhancer, "Override the checkpoint's enhancer")
      ->check(CLI::IsMember(kEnhancers));
  predict->add_option("--enhanced", enhanced_wav, "Pre-enhanced WAV for --enhancer external");

  std::string enhance_out;
  auto* enhance = app.add_subcommand("enhance", "Run the spectral-gate enhancer on a WAV");
  enhance->add_option("--wav", wav, "Input WAV")->required();
  enhance->add_option("--out", enhance_out, "Output WAV")->required();
  add_config_flags(enhance, flags);

  std::uint64_t gc_seed = 0;
  int gc_seeds = 20;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--seed", gc_seed, "First seed");
  gradcheck->add_option("--seeds", gc_seeds, "Number of seeds")->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("rsqa");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(out_dir, count, seed, duration, out);
    if (*train_cmd) return cmd_train(manifest, ckpt, flags, out, err);
    if (*eval_cmd) return cmd_eval(manifest, ckpt, report, plots, enhancer, out);
    if (*predict) return cmd_predict(wav, ckpt, enhancer, enhanced_wav, out);
    if (*enhance) return cmd_enhance(wav, enhance_out, flags, out);
    if (*gradcheck) return cmd_gradcheck(gc_seed, gc_seeds, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rsqa
