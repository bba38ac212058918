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

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace testing {

inline constexpr double kFs = 44100.0;

inline std::vector<double> sine(double hz, double seconds, double amp = 0.5, double phase = 0.3,
                                double fs = kFs) {
  std::vector<double> x(static_cast<std::size_t>(std::llround(seconds * fs)));
  for (std::size_t n = 0; n < x.size(); ++n) {
    x[n] = amp * std::cos(2.0 * std::numbers::pi * hz * static_cast<double>(n) / fs + phase);
  }
  return x;
}

inline std::vector<double> tones(const std::vector<double>& hz, double seconds, double amp = 0.4) {
  std::vector<double> x(static_cast<std::size_t>(std::llround(seconds * kFs)), 0.0);
  for (std::size_t i = 0; i < hz.size(); ++i) {
    const auto s = sine(hz[i], seconds, amp, 0.7 * static_cast<double>(i) + 0.2);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] += s[n];
  }
  return x;
}

inline std::vector<double> white_noise(double seconds, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> x(static_cast<std::size_t>(std::llround(seconds * kFs)));
  for (auto& v : x) v = d(rng);
  return x;
}

/// Linear chirp with phase accumulated sample by sample.
inline std::vector<double> glide(double f0, double f1, double seconds, double amp = 0.5) {
  std::vector<double> x(static_cast<std::size_t>(std::llround(seconds * kFs)));
  double phase = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double f = f0 + (f1 - f0) * static_cast<double>(n) / static_cast<double>(x.size());
    x[n] = amp * std::cos(phase);
    phase += 2.0 * std::numbers::pi * f / kFs;
  }
  return x;
}

/// Harmonic series with 1/k amplitudes.
inline std::vector<double> vowel(double f0, double seconds, int harmonics = 20, double amp = 0.1) {
  std::vector<double> x(static_cast<std::size_t>(std::llround(seconds * kFs)), 0.0);
  for (int k = 1; k <= harmonics && k * f0 < kFs / 2; ++k) {
    for (std::size_t n = 0; n < x.size(); ++n) {
      x[n] += amp / k * std::cos(2.0 * std::numbers::pi * f0 * k * static_cast<double>(n) / kFs + 0.1 * k);
    }
  }
  return x;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / fmt::format("vocalscope_test_{:x}", rd());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace testing
