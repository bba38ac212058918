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

#pragma once

// RIFF WAVE reading (PCM 8/16/24/32-bit, IEEE float 32/64, extensible) and
// canonical 44-byte-header PCM writing.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vocalscope {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WavInfo {
  int format_tag = 1;  // 1 PCM, 3 IEEE float (extensible resolved)
  int channels = 1;
  double sample_rate_hz = 44100.0;
  int bits_per_sample = 24;
  std::size_t frames = 0;
};

struct WavData {
  WavInfo info;
  /// Interleaved, scaled so the MSB maps to +-1.
  std::vector<double> samples;
};

inline constexpr std::size_t kCanonicalHeaderBytes = 44;

/// Throws FormatError for anything that is not a readable PCM/float WAVE.
WavData parse_wav(std::span<const std::uint8_t> bytes);
WavData read_wav(const std::filesystem::path& path);

/// Mono mix-down (channel mean) at the file's own rate.
std::vector<double> mix_to_mono(const WavData& data);

struct MonoAudio {
  double sample_rate_hz = 44100.0;
  std::vector<double> samples;
  WavInfo source;
};

/// Reads, mixes down and resamples to target_rate_hz when needed.
MonoAudio load_mono(const std::filesystem::path& path, double target_rate_hz = 44100.0);

/// Round to the nearest code and clamp; returns the integer code.
std::int32_t quantize_sample(double x, int bits);
double dequantize_sample(std::int32_t code, int bits);

/// Mono little-endian PCM with a 44-byte header. bits is 16 or 24.
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, double sample_rate_hz,
                                     int bits = 24);
/// Throws std::runtime_error when the file cannot be written.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double sample_rate_hz, int bits = 24);

}  // namespace vocalscope
