// Copyright 2026 The Vocalscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vocalscope/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "vocalscope/resampler.hpp"

namespace vocalscope {
namespace {

constexpr int kFormatPcm = 1;
constexpr int kFormatFloat = 3;
constexpr int kFormatExtensible = 0xFFFE;

std::uint32_t u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16(out, v & 0xFFFF);
  put16(out, v >> 16);
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

double decode_one(std::span<const std::uint8_t> b, std::size_t at, int format, int bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      const std::uint32_t raw = u32(b, at);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      return f;
    }
    std::uint64_t raw = u32(b, at) | (static_cast<std::uint64_t>(u32(b, at + 4)) << 32);
    double d;
    std::memcpy(&d, &raw, sizeof d);
    return d;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(b[at]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(u16(b, at)) / 32768.0;
    case 24: {
      std::int32_t v = b[at] | (b[at + 1] << 8) | (b[at + 2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(u32(b, at)) / 2147483648.0;
  }
}

}  // namespace

WavData parse_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12) throw FormatError("truncated RIFF header");
  if (!tag_is(b, 0, "RIFF") || !tag_is(b, 8, "WAVE")) throw FormatError("not a RIFF WAVE file");

  WavData data;
  bool have_fmt = false;
  int block_align = 0;
  std::size_t pos = 12;
  while (true) {
    if (pos + 8 > b.size()) {
      throw FormatError(have_fmt ? "missing data chunk" : "missing fmt chunk");
    }
    const std::uint32_t size = u32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_is(b, pos, "fmt ")) {
      if (size < 16 || body + size > b.size()) throw FormatError("truncated fmt chunk");
      int format = u16(b, body);
      data.info.channels = u16(b, body + 2);
      data.info.sample_rate_hz = u32(b, body + 4);
      block_align = u16(b, body + 12);
      data.info.bits_per_sample = u16(b, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError("truncated extensible fmt chunk");
        format = u16(b, body + 24);
      }
      data.info.format_tag = format;
      have_fmt = true;
    } else if (tag_is(b, pos, "data")) {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk");
      if (body + size > b.size()) {
        throw FormatError(fmt::format("truncated data chunk: header says {} bytes, {} present",
                                      size, b.size() - body));
      }
      const auto& info = data.info;
      const bool pcm_ok = info.format_tag == kFormatPcm &&
                          (info.bits_per_sample == 8 || info.bits_per_sample == 16 ||
                           info.bits_per_sample == 24 || info.bits_per_sample == 32);
      const bool float_ok = info.format_tag == kFormatFloat &&
                            (info.bits_per_sample == 32 || info.bits_per_sample == 64);
      if (!pcm_ok && !float_ok) {
        throw FormatError(fmt::format("unsupported sample format {} with {} bits",
                                      info.format_tag, info.bits_per_sample));
      }
      if (info.channels < 1) throw FormatError("zero channels");
      if (!(info.sample_rate_hz > 0)) throw FormatError("zero sample rate");
      const int bytes = info.bits_per_sample / 8;
      if (block_align != bytes * info.channels) throw FormatError("inconsistent block alignment");
      data.info.frames = size / static_cast<std::size_t>(block_align);
      data.samples.resize(data.info.frames * static_cast<std::size_t>(info.channels));
      for (std::size_t i = 0; i < data.samples.size(); ++i) {
        data.samples[i] = decode_one(b, body + i * static_cast<std::size_t>(bytes),
                                     info.format_tag, info.bits_per_sample);
      }
      return data;
    }
    pos = body + size + (size & 1U);
  }
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<double> mix_to_mono(const WavData& data) {
  const auto ch = static_cast<std::size_t>(data.info.channels);
  if (ch == 1) return data.samples;
  std::vector<double> mono(data.info.frames);
  for (std::size_t i = 0; i < mono.size(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < ch; ++c) sum += data.samples[i * ch + c];
    mono[i] = sum / static_cast<double>(ch);
  }
  return mono;
}

MonoAudio load_mono(const std::filesystem::path& path, double target_rate_hz) {
  const WavData data = read_wav(path);
  MonoAudio audio;
  audio.source = data.info;
  audio.sample_rate_hz = target_rate_hz;
  audio.samples = mix_to_mono(data);
  if (data.info.sample_rate_hz != target_rate_hz) {
    audio.samples = resample(audio.samples, data.info.sample_rate_hz, target_rate_hz);
  }
  return audio;
}

std::int32_t quantize_sample(double x, int bits) {
  const double scale = std::ldexp(1.0, bits - 1);
  const double code = std::nearbyint(x * scale);
  return static_cast<std::int32_t>(std::clamp(code, -scale, scale - 1.0));
}

double dequantize_sample(std::int32_t code, int bits) {
  return code / std::ldexp(1.0, bits - 1);
}

std::vector<std::uint8_t> encode_wav(std::span<const double> samples, double sample_rate_hz,
                                     int bits) {
  if (bits != 16 && bits != 24) throw std::invalid_argument("only 16- and 24-bit output");
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate_hz));
  const std::uint32_t bytes = static_cast<std::uint32_t>(bits / 8);
  const auto data_size = static_cast<std::uint32_t>(samples.size() * bytes);
  std::vector<std::uint8_t> out;
  out.reserve(kCanonicalHeaderBytes + data_size);
  put_tag(out, "RIFF");
  put32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * bytes);
  put16(out, bytes);
  put16(out, static_cast<std::uint32_t>(bits));
  put_tag(out, "data");
  put32(out, data_size);
  for (const double x : samples) {
    const auto code = static_cast<std::uint32_t>(quantize_sample(x, bits));
    for (std::uint32_t i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(code >> (8 * i)));
  }
  if (data_size & 1U) out.push_back(0);
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double sample_rate_hz, int bits) {
  const auto bytes = encode_wav(samples, sample_rate_hz, bits);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace vocalscope
