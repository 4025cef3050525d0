// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "rsqa/audio_io.hpp"
#include "rsqa/error.hpp"
#include "rsqa/random.hpp"
#include "test_util.hpp"

using namespace rsqa;
using testutil::TempDir;

namespace {

Eigen::ArrayXd random_signal(std::uint64_t seed, Eigen::Index n, double amp = 0.9) {
  Rng rng(seed);
  Eigen::ArrayXd x(n);
  for (auto& v : x) v = rng.uniform(-amp, amp);
  return x;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an rsqa::Error");
  return ErrorKind::kIo;
}

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("pcm16 file at 16 kHz is read unchanged up to scaling") {
  TempDir dir("wav16");
  std::vector<std::int16_t> pcm(16000);
  Rng rng(3);
  for (auto& v : pcm) v = static_cast<std::int16_t>(static_cast<int>(rng.below(65536)) - 32768);
  testutil::write_raw_wav(dir / "a.wav", 1, 1, 16000, 16, testutil::pcm16_bytes(pcm));
  const AudioClip clip = read_wav(dir / "a.wav");
  REQUIRE(clip.size() == 16000);
  CHECK(clip.sample_rate == 16000);
  for (int i = 0; i < 16000; ++i) REQUIRE(clip.samples[i] == pcm[i] / 32768.0);
}

TEST_CASE("32 kHz file is resampled to half the length") {
  TempDir dir("wav32");
  std::vector<std::int16_t> pcm(32000);
  for (int i = 0; i < 32000; ++i)
    pcm[i] = static_cast<std::int16_t>(std::lround(8000 * std::sin(2 * M_PI * 440 * i / 32000.0)));
  testutil::write_raw_wav(dir / "a.wav", 1, 1, 32000, 16, testutil::pcm16_bytes(pcm));
  const AudioClip clip = read_wav(dir / "a.wav");
  CHECK(clip.size() == 16000);
  CHECK(clip.sample_rate == kSampleRate);
  // Every other source sample lands exactly on an output sample.
  CHECK(clip.samples[100] == doctest::Approx(pcm[200] / 32768.0).epsilon(1e-12));
}

TEST_CASE("resampled length rounds the rate ratio") {
  for (int rate : {8000, 32000, 44100, 48000})
    for (Eigen::Index n : {1, 7, 441, 1000, 44099}) {
      const auto y = resample_linear(Eigen::ArrayXd::Ones(n), rate, kSampleRate);
      CHECK(y.size() == std::lround(static_cast<double>(n) * kSampleRate / rate));
    }
}

TEST_CASE("stereo is averaged to mono") {
  TempDir dir("stereo");
  testutil::write_raw_wav(dir / "s.wav", 1, 2, 16000, 16,
                          testutil::pcm16_bytes({1000, 3000, -2000, 0}));
  const AudioClip clip = read_wav(dir / "s.wav");
  REQUIRE(clip.size() == 2);
  CHECK(clip.samples[0] == doctest::Approx(2000 / 32768.0));
  CHECK(clip.samples[1] == doctest::Approx(-1000 / 32768.0));
}

TEST_CASE("float32 files are accepted") {
  TempDir dir("f32");
  std::string data;
  for (float v : {0.25f, -0.5f, 0.75f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    testutil::put_u32(data, bits);
  }
  testutil::write_raw_wav(dir / "f.wav", 3, 1, 16000, 32, data);
  const AudioClip clip = read_wav(dir / "f.wav");
  REQUIRE(clip.size() == 3);
  CHECK(clip.samples[1] == -0.5);
}

TEST_CASE("unsupported and malformed files are rejected") {
  TempDir dir("bad");
  testutil::write_raw_wav(dir / "mulaw.wav", 7, 1, 8000, 8, std::string(100, '\x7f'));
  try {
    read_wav(dir / "mulaw.wav");
    FAIL("mu-law accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnsupported);
    CHECK(std::string(e.what()).find("unsupported encoding") != std::string::npos);
  }
  testutil::write_raw_wav(dir / "rate.wav", 1, 1, 22050, 16, testutil::pcm16_bytes({1, 2}));
  CHECK(kind_of([&] { read_wav(dir / "rate.wav"); }) == ErrorKind::kUnsupported);
  write_text(dir / "junk.wav", "not a wave file at all");
  CHECK(kind_of([&] { read_wav(dir / "junk.wav"); }) == ErrorKind::kFormat);
  // Truncated: header claims more data than present.
  testutil::write_raw_wav(dir / "t.wav", 1, 1, 16000, 16, testutil::pcm16_bytes({1, 2, 3, 4}));
  const std::string s = testutil::read_file(dir / "t.wav");
  write_text(dir / "t.wav", s.substr(0, s.size() - 3));
  CHECK(kind_of([&] { read_wav(dir / "t.wav"); }) == ErrorKind::kFormat);
  CHECK(kind_of([&] { read_wav(dir / "missing.wav"); }) == ErrorKind::kIo);
}

TEST_CASE("write then read is identity within one quantization step") {
  TempDir dir("rt");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AudioClip clip(random_signal(seed, 4000, 1.0));
    write_wav(clip, dir / "x.wav");
    const AudioClip back = read_wav(dir / "x.wav");
    REQUIRE(back.size() == clip.size());
    CHECK((back.samples - clip.samples).abs().maxCoeff() <= 1.0 / 32768.0);
  }
}

TEST_CASE("write clamps out-of-range samples") {
  TempDir dir("clamp");
  Eigen::ArrayXd x(4);
  x << 1.5, -1.5, 1.0, -1.0;
  write_wav(AudioClip(x), dir / "c.wav");
  const std::string bytes = testutil::read_file(dir / "c.wav");
  const auto sample = [&](int i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + 44 + 2 * i);
    return static_cast<std::int16_t>(p[0] | (p[1] << 8));
  };
  CHECK(sample(0) == 32767);
  CHECK(sample(1) == -32768);
  CHECK(sample(2) == 32767);
  CHECK(sample(3) == -32768);
}

TEST_CASE("quantization rounds half away from zero") {
  Eigen::ArrayXd x(4);
  x << 0.5 / 32768, -0.5 / 32768, 1.49 / 32768, -2.5 / 32768;
  const AudioClip q = quantize_pcm16(AudioClip(x));
  CHECK(q.samples[0] * 32768 == 1);
  CHECK(q.samples[1] * 32768 == -1);
  CHECK(q.samples[2] * 32768 == 1);
  CHECK(q.samples[3] * 32768 == -3);
}

TEST_CASE("invalid clips are rejected") {
  TempDir dir("empty");
  CHECK(kind_of([&] { write_wav(AudioClip(Eigen::ArrayXd()), dir / "e.wav"); }) ==
        ErrorKind::kContract);
  try {
    validate_clip(AudioClip(Eigen::ArrayXd()));
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "empty clip");
  }
  Eigen::ArrayXd nan_clip = Eigen::ArrayXd::Zero(3);
  nan_clip[1] = std::nan("");
  CHECK(kind_of([&] { validate_clip(AudioClip(nan_clip)); }) == ErrorKind::kContract);
}

TEST_CASE("manifest parsing") {
  TempDir dir("manifest");
  const auto p = dir / "m.csv";
  write_text(p, "clip_path,mos,enhanced_path,condition_tag\na.wav,3.20,,noise\nb.wav,1.5,b_enh.wav,\n");
  const Manifest m = load_manifest(p);
  REQUIRE(m.records.size() == 2);
  CHECK(m.records[0].clip_path == "a.wav");
  CHECK(m.records[0].mos == 3.20);
  CHECK_FALSE(m.records[0].enhanced_path.has_value());
  CHECK(m.records[0].condition_tag == "noise");
  CHECK(m.records[1].enhanced_path.value() == "b_enh.wav");
  CHECK(m.resolve("a.wav") == dir.path() / "a.wav");

  SUBCASE("out of range mos names the row") {
    write_text(p, "clip_path,mos,enhanced_path,condition_tag\na.wav,3.0,,x\nb.wav,6.0,,x\n");
    try {
      load_manifest(p);
      FAIL("accepted mos 6");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kValidation);
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
  }
  SUBCASE("empty file") {
    write_text(p, "");
    try {
      load_manifest(p);
      FAIL("accepted empty manifest");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("empty manifest") != std::string::npos);
    }
  }
  SUBCASE("header only") {
    write_text(p, "clip_path,mos,enhanced_path,condition_tag\n");
    CHECK(kind_of([&] { load_manifest(p); }) == ErrorKind::kFormat);
  }
  SUBCASE("wrong header or field count") {
    write_text(p, "path,mos\na.wav,3\n");
    CHECK(kind_of([&] { load_manifest(p); }) == ErrorKind::kFormat);
    write_text(p, "clip_path,mos,enhanced_path,condition_tag\na.wav,3\n");
    CHECK(kind_of([&] { load_manifest(p); }) == ErrorKind::kFormat);
    write_text(p, "clip_path,mos,enhanced_path,condition_tag\na.wav,three,,x\n");
    CHECK(kind_of([&] { load_manifest(p); }) == ErrorKind::kFormat);
  }
}

TEST_CASE("manifest save and load round trip") {
  TempDir dir("msave");
  Manifest m;
  m.records = {{"x/a.wav", 2.5, std::nullopt, "reverb"}, {"b.wav", 4.1234, "e.wav", "a+b"}};
  save_manifest(m, dir / "m.csv");
  const Manifest back = load_manifest(dir / "m.csv");
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].mos == 4.1234);
  CHECK(back.records[1].enhanced_path == std::optional<std::string>("e.wav"));
  CHECK(back.records[0].condition_tag == "reverb");
}

TEST_CASE("clean reference table") {
  TempDir dir("refs");
  CHECK(load_clean_refs(dir / "none.csv").empty());
  write_text(dir / "r.csv", "degraded_path,clean_path\nd/1.wav,c/1.wav\n");
  const auto refs = load_clean_refs(dir / "r.csv");
  REQUIRE(refs.size() == 1);
  CHECK(refs[0].second == "c/1.wav");
}
