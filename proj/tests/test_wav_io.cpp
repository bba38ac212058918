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

#include <doctest.h>

#include <cstring>
#include <fstream>

#include "support.hpp"
#include "vocalscope/resampler.hpp"
#include "vocalscope/wav_io.hpp"

using namespace vocalscope;

namespace {

// Minimal RIFF writer independent of the library encoder.
class Riff {
 public:
  void tag(const char* t) { bytes.insert(bytes.end(), t, t + 4); }
  void u16(unsigned v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u32(u);
  }
  std::vector<std::uint8_t> bytes;
};

std::vector<std::uint8_t> build_wav(int tag, int channels, int rate, int bits,
                                    const std::vector<std::uint8_t>& data, bool extensible = false,
                                    bool odd_chunk = false) {
  Riff r;
  const int align = channels * bits / 8;
  r.tag("RIFF");
  r.u32(0);  // patched below
  r.tag("WAVE");
  if (odd_chunk) {
    r.tag("LIST");
    r.u32(3);
    r.le(0x616263, 3);
    r.bytes.push_back(0);  // pad byte
  }
  r.tag("fmt ");
  r.u32(extensible ? 40 : 16);
  r.u16(extensible ? 0xFFFE : tag);
  r.u16(channels);
  r.u32(rate);
  r.u32(rate * align);
  r.u16(align);
  r.u16(bits);
  if (extensible) {
    r.u16(22);
    r.u16(bits);
    r.u32(0);
    r.u16(tag);
    // Remainder of the KSDATAFORMAT subtype GUID.
    const std::uint8_t guid[14] = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80,
                                   0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
    r.bytes.insert(r.bytes.end(), guid, guid + 14);
  }
  r.tag("data");
  r.u32(static_cast<std::uint32_t>(data.size()));
  r.bytes.insert(r.bytes.end(), data.begin(), data.end());
  const auto riff_size = static_cast<std::uint32_t>(r.bytes.size() - 8);
  for (int i = 0; i < 4; ++i) r.bytes[4 + i] = static_cast<std::uint8_t>(riff_size >> (8 * i));
  return r.bytes;
}

std::vector<std::uint8_t> pcm16(const std::vector<int>& codes) {
  Riff r;
  for (int c : codes) r.u16(static_cast<unsigned>(c) & 0xFFFF);
  return r.bytes;
}

}  // namespace

TEST_SUITE("wav_io") {

TEST_CASE("ten seconds of 24-bit mono is 1,323,044 bytes") {
  const std::vector<double> x(441000, 0.25);
  const auto bytes = encode_wav(x, 44100.0, 24);
  CHECK(bytes.size() == 1323044);
  CHECK(std::memcmp(bytes.data(), "RIFF", 4) == 0);
  CHECK(std::memcmp(bytes.data() + 36, "data", 4) == 0);
  const auto parsed = parse_wav(bytes);
  CHECK(parsed.info.bits_per_sample == 24);
  CHECK(parsed.info.frames == 441000);
  CHECK(encode_wav(x, 44100.0, 16).size() == 882044);
  CHECK_THROWS_AS(encode_wav(x, 44100.0, 12), std::invalid_argument);
}

TEST_CASE("quantization matches the scaled rounding") {
  CHECK(quantize_sample(0.5, 16) == 16384);
  CHECK(quantize_sample(-0.5, 16) == -16384);
  CHECK(quantize_sample(1.0, 16) == 32767);
  CHECK(quantize_sample(-1.0, 16) == -32768);
  CHECK(quantize_sample(2.0, 24) == 8388607);
  CHECK(quantize_sample(-3.0, 24) == -8388608);
  CHECK(dequantize_sample(-32768, 16) == -1.0);
  CHECK(dequantize_sample(4194304, 24) == 0.5);
}

TEST_CASE("encode and parse round trip within one quantization step") {
  testing::TempDir dir;
  const auto x = testing::sine(330.0, 0.2, 0.8);
  for (int bits : {16, 24}) {
    const auto path = dir / fmt::format("t{}.wav", bits);
    write_wav(path, x, 44100.0, bits);
    const auto back = read_wav(path);
    REQUIRE(back.samples.size() == x.size());
    const double step = std::ldexp(1.0, -(bits - 1));
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(back.samples[i] - x[i]) <= 0.5 * step + 1e-15);
    }
  }
}

TEST_CASE("hand-built files decode") {
  SUBCASE("16-bit stereo mixes to the channel mean") {
    const auto bytes = build_wav(1, 2, 44100, 16, pcm16({16384, 0, -32768, 32767}));
    const auto w = parse_wav(bytes);
    CHECK(w.info.channels == 2);
    CHECK(w.info.frames == 2);
    const auto mono = mix_to_mono(w);
    REQUIRE(mono.size() == 2);
    CHECK(mono[0] == doctest::Approx(0.25));
    CHECK(mono[1] == doctest::Approx((-1.0 + 32767.0 / 32768.0) / 2.0));
  }
  SUBCASE("32-bit float") {
    Riff d;
    d.f32(0.125f);
    d.f32(-0.75f);
    const auto w = parse_wav(build_wav(3, 1, 48000, 32, d.bytes));
    CHECK(w.info.format_tag == 3);
    CHECK(w.info.sample_rate_hz == 48000.0);
    CHECK(w.samples == std::vector<double>{0.125, -0.75});
  }
  SUBCASE("8-bit unsigned") {
    const auto w = parse_wav(build_wav(1, 1, 8000, 8, {128, 255, 0}));
    CHECK(w.samples[0] == 0.0);
    CHECK(w.samples[1] == doctest::Approx(127.0 / 128.0));
    CHECK(w.samples[2] == -1.0);
  }
  SUBCASE("extensible PCM after an odd-sized chunk") {
    const auto w = parse_wav(build_wav(1, 1, 44100, 16, pcm16({8192, -8192}), true, true));
    CHECK(w.info.format_tag == 1);
    CHECK(w.samples == std::vector<double>{0.25, -0.25});
  }
}

TEST_CASE("malformed files raise FormatError") {
  const auto good = build_wav(1, 1, 44100, 16, pcm16({1, 2, 3, 4}));
  CHECK_THROWS_AS(parse_wav(std::span(good).first(20)), FormatError);
  CHECK_THROWS_AS(parse_wav(std::span(good).first(good.size() - 3)), FormatError);
  auto bad = good;
  std::memcpy(bad.data(), "RIFX", 4);
  CHECK_THROWS_AS(parse_wav(bad), FormatError);
  CHECK_THROWS_AS(parse_wav(build_wav(2, 1, 44100, 4, {0, 0})), FormatError);
  auto misaligned = good;
  misaligned[32] = 3;  // block align
  CHECK_THROWS_AS(parse_wav(misaligned), FormatError);
  CHECK_THROWS_AS(read_wav("/nonexistent/file.wav"), std::runtime_error);
}

TEST_CASE("48 kHz 16-bit input is resampled to the analysis rate") {
  testing::TempDir dir;
  const auto x = testing::sine(440.0, 1.0, 0.5, 0.0, 48000.0);
  write_wav(dir / "a.wav", x, 48000.0, 16);
  const auto mono = load_mono(dir / "a.wav");
  CHECK(mono.sample_rate_hz == 44100.0);
  CHECK(mono.source.sample_rate_hz == 48000.0);
  CHECK(mono.samples.size() == 44100);
  const auto expected = testing::sine(440.0, 1.0, 0.5, 0.0);
  double worst = 0.0;
  for (std::size_t i = 1000; i < 43000; ++i) {
    worst = std::max(worst, std::abs(mono.samples[i] - expected[i]));
  }
  CHECK(worst < 1e-3);
}

}

TEST_SUITE("resampler") {

TEST_CASE("length, identity and band limiting") {
  const auto x = testing::sine(1000.0, 0.5);
  CHECK(resample(x, 44100.0, 44100.0) == x);
  CHECK(resample(x, 44100.0, 48000.0).size() == 24000);
  CHECK(resample(x, 44100.0, 22050.0).size() == 11025);
  // A 15 kHz tone vanishes when going down to 22.05 kHz.
  const auto high = testing::sine(15000.0, 0.5);
  const auto down = resample(high, 44100.0, 22050.0);
  double peak = 0.0;
  for (std::size_t i = 200; i + 200 < down.size(); ++i) peak = std::max(peak, std::abs(down[i]));
  CHECK(peak < 1e-3);
  CHECK_THROWS_AS(resample(x, 0.0, 44100.0), std::invalid_argument);
}

}
