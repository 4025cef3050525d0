// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rsqa/cli.hpp"
#include "rsqa/degradation.hpp"
#include "rsqa/error.hpp"
#include "rsqa/metrics.hpp"
#include "rsqa/pipeline.hpp"
#include "rsqa/random.hpp"
#include "rsqa/run_config.hpp"
#include "test_util.hpp"

using namespace rsqa;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rsqa");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("enhancer names") {
  CHECK(parse_enhancer("spectral-gate") == EnhancerKind::kSpectralGate);
  CHECK(parse_enhancer("external") == EnhancerKind::kExternal);
  CHECK(parse_enhancer("none") == EnhancerKind::kNone);
  CHECK(to_string(EnhancerKind::kSpectralGate) == "spectral-gate");
  CHECK_THROWS_AS(parse_enhancer("metricgan"), Error);
}

TEST_CASE("pipeline features") {
  const AudioClip clean = gen_clean(1, 1.0);
  const AudioClip noisy = add_noise_snr(clean, NoiseKind::kWhite, 5.0, 2);
  PipelineConfig cfg;
  const FeatureTensor with = extract_features(noisy, cfg);
  CHECK(with.frames == 61);
  CHECK(with.values.row(1).maxCoeff() > std::log(1e-7));

  cfg.use_residual = false;
  const FeatureTensor without = extract_features(noisy, cfg);
  CHECK(without.values.row(1).isZero());
  CHECK(without.values.row(0) == with.values.row(0));

  PipelineConfig none;
  none.enhancer = EnhancerKind::kNone;
  CHECK_FALSE(none.residual_enabled());
  CHECK(extract_features(noisy, none).values.row(1).isZero());

  PipelineConfig ext;
  ext.enhancer = EnhancerKind::kExternal;
  CHECK_THROWS_AS(extract_features(noisy, ext), Error);
  const FeatureTensor e = extract_features(noisy, ext, std::nullopt, clean);
  const FeatureTensor direct = assemble_features(noisy, residual(noisy, clean));
  CHECK(e.values == direct.values);

  // A reference that shows the enhancer hurts gates channel 1 to the floor.
  Rng rng(3);
  Eigen::ArrayXd junk(noisy.size());
  for (auto& v : junk) v = rng.uniform(-1, 1);
  const FeatureTensor gated = extract_features(noisy, ext, clean, AudioClip(junk));
  CHECK((gated.values.row(1).array() - std::log(1e-7)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("run config keys, overrides and validation") {
  RunConfig cfg;
  CHECK(cfg.train.lr == 1e-3);
  CHECK(cfg.model.dropout_p == 0.3);
  CHECK(cfg.pipeline.gate.oversubtraction == 1.5);
  CHECK(cfg.alpha == 0.5);
  cfg.set("train.lr", "0.01");
  cfg.set("enhancer.kind", "none");
  cfg.set("model.block_channels", "[8,16,32,64]");
  CHECK(cfg.train.lr == 0.01);
  CHECK(cfg.pipeline.enhancer == EnhancerKind::kNone);
  CHECK(cfg.model.block_channels[0] == 8);
  CHECK_THROWS_AS(cfg.set("train.learning_rate", "1"), Error);
  CHECK_THROWS_AS(cfg.set("train.lr", "\"fast\""), Error);

  const auto parsed = nlohmann::json::parse(RunConfig{}.to_json());
  CHECK(parsed.size() == RunConfig::keys().size());
  for (const auto& k : RunConfig::keys()) CHECK(parsed.contains(k));

  RunConfig bad;
  bad.set("stft.fft_size", "1024");
  CHECK_THROWS_AS(bad.validate(), Error);

  testutil::TempDir dir("cfg");
  std::ofstream(dir / "c.json") << R"({"train.max_epochs": 7, "enhancer.use_residual": false})";
  RunConfig file;
  file.load_file(dir / "c.json");
  CHECK(file.train.max_epochs == 7);
  CHECK_FALSE(file.pipeline.use_residual);
  std::ofstream(dir / "d.json") << R"({"nope": 1})";
  CHECK_THROWS_AS(file.load_file(dir / "d.json"), Error);
}

TEST_CASE("cli usage errors exit 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"synth", "--count", "10", "--seed", "7"}).code == kExitUsage);
  CHECK(cli({"train", "--manifest", "m.csv", "--out", "x", "--enhancer", "bogus"}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train", "--manifest", "m.csv", "--out", "x", "--set", "train.lr=-1"}).code ==
        kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("cli synth, train, eval, predict, enhance") {
  testutil::TempDir dir("cli");
  const std::string corpus = (dir / "corpus").string();
  const Run s1 = cli({"synth", "--out", corpus, "--count", "10", "--seed", "7", "--duration", "0.5"});
  REQUIRE(s1.code == kExitOk);
  CHECK(s1.out.find("count=10") != std::string::npos);
  CHECK(load_manifest(dir / "corpus/manifest.csv").records.size() == 10);
  const auto first = testutil::snapshot(dir / "corpus");
  CHECK(cli({"synth", "--out", corpus, "--count", "10", "--seed", "7", "--duration", "0.5"}).code ==
        kExitOk);
  CHECK(testutil::snapshot(dir / "corpus") == first);

  const std::string manifest = (dir / "corpus/manifest.csv").string();
  const std::string ckpt = (dir / "res/model.ckpt").string();
  const Run t = cli({"train", "--manifest", manifest, "--out", ckpt, "--set", "train.max_epochs=2"});
  REQUIRE(t.code == kExitOk);
  CHECK(std::filesystem::exists(dir / "res/train_log.csv"));
  CHECK(t.err.find("epoch 2") != std::string::npos);

  const std::string abl = (dir / "abl/model.ckpt").string();
  REQUIRE(cli({"train", "--manifest", manifest, "--out", abl, "--set", "train.max_epochs=2",
               "--no-residual"})
              .code == kExitOk);
  CHECK(testutil::read_file(ckpt) != testutil::read_file(abl));

  const std::string report = (dir / "report.json").string();
  const std::string plots = (dir / "plots").string();
  const Run e = cli({"eval", "--manifest", manifest, "--ckpt", ckpt, "--report", report, "--plots",
                     plots});
  REQUIRE(e.code == kExitOk);
  const EvalReport rep = EvalReport::from_json(testutil::read_file(report));
  std::ostringstream expected;
  expected.setf(std::ios::fixed);
  expected.precision(6);
  expected << "RMSE=" << *rep.aggregate.rmse.value << " PCC=" << *rep.aggregate.pcc.value
           << " SRCC=" << *rep.aggregate.srcc.value << '\n';
  CHECK(e.out == expected.str());
  CHECK(std::filesystem::exists(dir / "plots/scatter.csv"));
  CHECK(std::filesystem::exists(dir / "plots/hist.csv"));

  const std::string wav = (dir / "corpus/degraded/0003.wav").string();
  const Run p1 = cli({"predict", "--wav", wav, "--ckpt", ckpt});
  const Run p2 = cli({"predict", "--wav", wav, "--ckpt", ckpt});
  REQUIRE(p1.code == kExitOk);
  CHECK(p1.out == p2.out);
  const double mos = std::stod(p1.out);
  CHECK(mos >= 1.0);
  CHECK(mos <= 5.0);
  CHECK(p1.out.size() == 6);  // "d.ddd\n"

  write_wav(AudioClip(Eigen::ArrayXd::Constant(300, 0.1)), dir / "short.wav");
  const Run shortp = cli({"predict", "--wav", (dir / "short.wav").string(), "--ckpt", ckpt});
  CHECK(shortp.code == kExitFailure);
  CHECK(shortp.err.find("clip too short") != std::string::npos);
  CHECK(cli({"predict", "--wav", wav, "--ckpt", (dir / "none.ckpt").string()}).code == kExitFailure);
  CHECK(cli({"eval", "--manifest", (dir / "none.csv").string(), "--ckpt", ckpt, "--report", report})
            .code == kExitFailure);

  const std::string enhanced = (dir / "enh.wav").string();
  REQUIRE(cli({"enhance", "--wav", wav, "--out", enhanced}).code == kExitOk);
  CHECK(read_wav(enhanced).size() == read_wav(wav).size());
}

TEST_CASE("cli gradcheck") {
  const Run a = cli({"gradcheck", "--seed", "3", "--seeds", "2"});
  const Run b = cli({"gradcheck", "--seed", "3", "--seeds", "2"});
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  std::istringstream lines(a.out);
  std::string line;
  int rows = 0;
  std::getline(lines, line);
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 7);
}
