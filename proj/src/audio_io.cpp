// Copyright (c) 2026 The rsqa Authors.
// SPDX-License-Identifier: Apache-2.0

#include "rsqa/audio_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rsqa/error.hpp"

namespace rsqa {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kDivergence: return "divergence";
  }
  return "unknown";
}

namespace {

constexpr std::array<int, 5> kAcceptedRates = {8000, 16000, 32000, 44100,
                                               48000};

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::string trim_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::int16_t to_pcm16(double v) {
  v = std::clamp(v, -1.0, 1.0);
  return static_cast<std::int16_t>(std::clamp(std::lround(v * 32768.0), -32768L, 32767L));
}

}  // namespace

AudioClip quantize_pcm16(const AudioClip& clip) {
  AudioClip out = clip;
  for (Eigen::Index i = 0; i < out.size(); ++i) out.samples[i] = to_pcm16(clip.samples[i]) / 32768.0;
  return out;
}

void validate_clip(const AudioClip& clip) {
  if (clip.size() == 0) throw Error(ErrorKind::kContract, "empty clip");
  if (clip.sample_rate != kSampleRate)
    throw Error(ErrorKind::kContract,
                "clip sample rate " + std::to_string(clip.sample_rate) +
                    " is not 16000");
  if (!clip.samples.isFinite().all())
    throw Error(ErrorKind::kContract, "clip contains non-finite samples");
}

Eigen::ArrayXd resample_linear(const Eigen::ArrayXd& x, int source_rate,
                               int target_rate) {
  if (source_rate == target_rate) return x;
  const Eigen::Index n = x.size();
  const auto out_n = static_cast<Eigen::Index>(std::llround(
      static_cast<double>(n) * target_rate / static_cast<double>(source_rate)));
  Eigen::ArrayXd y(out_n);
  const double step = static_cast<double>(source_rate) / target_rate;
  for (Eigen::Index i = 0; i < out_n; ++i) {
    const double pos = static_cast<double>(i) * step;
    auto j = static_cast<Eigen::Index>(pos);
    if (j >= n - 1) {
      y[i] = x[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(j);
    y[i] = x[j] * (1.0 - frac) + x[j + 1] * frac;
  }
  return y;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorKind::kFormat, where + "not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size())
        throw Error(ErrorKind::kFormat, where + "truncated fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40)
          throw Error(ErrorKind::kFormat, where + "truncated extensible fmt");
        format = read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + size > bytes.size())
        throw Error(ErrorKind::kFormat, where + "truncated data chunk");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt) throw Error(ErrorKind::kFormat, where + "missing fmt chunk");
  if (data == nullptr) throw Error(ErrorKind::kFormat, where + "missing data chunk");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw Error(ErrorKind::kUnsupported, where + "unsupported encoding (format " +
                                             std::to_string(format) + ", " +
                                             std::to_string(bits) + " bits)");
  if (channels < 1 || channels > 2)
    throw Error(ErrorKind::kUnsupported,
                where + "unsupported channel count " + std::to_string(channels));
  if (std::find(kAcceptedRates.begin(), kAcceptedRates.end(),
                static_cast<int>(rate)) == kAcceptedRates.end())
    throw Error(ErrorKind::kUnsupported,
                where + "unsupported sample rate " + std::to_string(rate));

  const std::size_t frame_bytes = static_cast<std::size_t>(bits / 8) * channels;
  if (data_size % frame_bytes != 0)
    throw Error(ErrorKind::kFormat, where + "truncated sample frame");
  const auto frames = static_cast<Eigen::Index>(data_size / frame_bytes);
  if (frames == 0) throw Error(ErrorKind::kFormat, where + "no samples");

  Eigen::ArrayXd mono(frames);
  for (Eigen::Index i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = data + static_cast<std::size_t>(i) * frame_bytes +
                               static_cast<std::size_t>(c) * (bits / 8);
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        float f;
        const std::uint32_t u = read_u32(p);
        std::memcpy(&f, &u, sizeof f);
        acc += static_cast<double>(f);
      }
    }
    mono[i] = acc / channels;
  }
  if (!mono.isFinite().all())
    throw Error(ErrorKind::kFormat, where + "non-finite samples");
  return AudioClip(resample_linear(mono, static_cast<int>(rate), kSampleRate));
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
  validate_clip(clip);
  const auto n = static_cast<std::uint32_t>(clip.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (Eigen::Index i = 0; i < clip.size(); ++i) {
    put_u16(out, static_cast<std::uint16_t>(to_pcm16(clip.samples[i])));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest " + path.string());
  Manifest m;
  m.root_dir = path.parent_path();
  std::string line;
  if (!std::getline(in, line) || trim_cr(line).empty())
    throw Error(ErrorKind::kFormat, "empty manifest: " + path.string());
  if (trim_cr(line) != "clip_path,mos,enhanced_path,condition_tag")
    throw Error(ErrorKind::kFormat,
                "manifest header must be clip_path,mos,enhanced_path,condition_tag");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string at = path.string() + " row " + std::to_string(row) + ": ";
    if (fields.size() != 4)
      throw Error(ErrorKind::kFormat, at + "expected 4 fields, got " +
                                          std::to_string(fields.size()));
    CorpusRecord r;
    r.clip_path = fields[0];
    if (r.clip_path.empty()) throw Error(ErrorKind::kValidation, at + "empty clip_path");
    const std::string& mos = fields[1];
    const auto res = std::from_chars(mos.data(), mos.data() + mos.size(), r.mos);
    if (res.ec != std::errc() || res.ptr != mos.data() + mos.size())
      throw Error(ErrorKind::kFormat, at + "mos '" + mos + "' is not a number");
    if (!(r.mos >= 1.0 && r.mos <= 5.0))
      throw Error(ErrorKind::kValidation, at + "mos " + mos + " outside [1,5]");
    if (!fields[2].empty()) r.enhanced_path = fields[2];
    r.condition_tag = fields[3];
    m.records.push_back(std::move(r));
  }
  if (m.records.empty())
    throw Error(ErrorKind::kFormat, "empty manifest: " + path.string());
  return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "clip_path,mos,enhanced_path,condition_tag\n";
  for (const auto& r : manifest.records) {
    char mos[32];
    const auto res = std::to_chars(mos, mos + sizeof mos, r.mos,
                                   std::chars_format::fixed, 4);
    out << r.clip_path << ',' << std::string_view(mos, res.ptr - mos) << ','
        << r.enhanced_path.value_or("") << ',' << r.condition_tag << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
}

std::vector<std::pair<std::string, std::string>> load_clean_refs(
    const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> refs;
  if (!std::filesystem::exists(path)) return refs;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != "degraded_path,clean_path")
    throw Error(ErrorKind::kFormat,
                path.string() + ": header must be degraded_path,clean_path");
  while (std::getline(in, line)) {
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2)
      throw Error(ErrorKind::kFormat, path.string() + ": malformed row '" + line + "'");
    refs.emplace_back(fields[0], fields[1]);
  }
  return refs;
}

}  // namespace rsqa
