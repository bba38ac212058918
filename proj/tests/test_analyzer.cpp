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

#include <cmath>

#include "support.hpp"
#include "vocalscope/analyzer.hpp"

using namespace vocalscope;

namespace {

std::vector<AnalysisFrame> run_blocks(const AnalyzerConfig& config, const std::vector<double>& x,
                                      std::size_t block) {
  Analyzer a(config);
  std::vector<AnalysisFrame> out;
  for (std::size_t i = 0; i < x.size(); i += block) {
    a.push(std::span<const double>(x).subspan(i, std::min(block, x.size() - i)));
    for (auto& f : a.drain()) out.push_back(std::move(f));
  }
  a.finish();
  for (auto& f : a.drain()) out.push_back(std::move(f));
  return out;
}

}  // namespace

TEST_SUITE("analyzer") {

TEST_CASE("hop from milliseconds") {
  CHECK(hop_samples_from_ms(5.0, 44100.0) == 220);
  CHECK(hop_samples_from_ms(10.0, 44100.0) == 441);
  CHECK(hop_samples_from_ms(0.001, 44100.0) == 1);
  CHECK(hop_samples_from_ms(5.0, 48000.0) == 240);
}

TEST_CASE("sample_linear and decimation") {
  const std::vector<double> x{0.0, 1.0, 4.0};
  CHECK(sample_linear(x, 0.5) == 0.5);
  CHECK(sample_linear(x, 1.25) == 1.75);
  CHECK(sample_linear(x, -1.0) == 0.0);
  CHECK(sample_linear(x, 3.5) == 0.0);
  CHECK(decimate_waveform(x, 5) == std::vector<double>{0.0, 0.5, 1.0, 2.5, 4.0});
  CHECK(decimate_waveform({}, 5).empty());
}

TEST_CASE("aligned snippet of a 220 Hz tone") {
  const double phi0 = 0.9;
  const auto x = testing::sine(220.0, 0.3, 0.5, phi0);
  const long long end = 10000;
  const double phase_end = 2.0 * std::numbers::pi * 220.0 * end / testing::kFs + phi0;
  const auto w = aligned_snippet(x, 0, end, 220.0, std::remainder(phase_end, 2.0 * std::numbers::pi),
                                 testing::kFs);
  CHECK(w.samples.size() == 802);
  CHECK(w.period_samples == doctest::Approx(44100.0 / 220.0));
  CHECK(w.start_sample + 4.0 * w.period_samples <= static_cast<double>(end) + 1e-9);
  CHECK(w.start_sample + 5.0 * w.period_samples > static_cast<double>(end));
  // The snippet opens on a cosine crest.
  CHECK(w.samples.front() == doctest::Approx(0.5).epsilon(1e-3));
  const double start_phase = 2.0 * std::numbers::pi * 220.0 * w.start_sample / testing::kFs + phi0;
  CHECK(std::abs(std::remainder(start_phase, 2.0 * std::numbers::pi)) < 1e-9);
  CHECK_THROWS_AS(aligned_snippet(x, 0, end, 0.0, 0.0, testing::kFs), std::invalid_argument);
}

TEST_CASE("frame snippets stay phase locked") {
  const double phi0 = -1.3;
  const auto x = testing::sine(220.0, 1.0, 0.5, phi0);
  AnalyzerConfig config;
  config.spectrum = false;
  const auto frames = analyze_signal(config, x);
  std::vector<double> phases;
  for (const auto& f : frames) {
    if (f.warmup || !f.best || f.waveform.samples.empty()) continue;
    CHECK(f.waveform.samples.size() == 802);
    const double p = 2.0 * std::numbers::pi * 220.0 * f.waveform.start_sample / testing::kFs + phi0;
    phases.push_back(std::remainder(p, 2.0 * std::numbers::pi));
    if (phases.size() == 10) break;
  }
  REQUIRE(phases.size() == 10);
  const auto [lo, hi] = std::minmax_element(phases.begin(), phases.end());
  CHECK(*hi - *lo < 0.1 * std::numbers::pi);
}

TEST_CASE("pure tones are found within half a percent") {
  AnalyzerConfig config;
  config.spectrum = false;
  config.aligned_waveform = false;
  for (double f : {110.0, 220.0, 440.0, 880.0}) {
    CAPTURE(f);
    const auto frames = analyze_signal(config, testing::sine(f, 1.0, 0.3));
    int total = 0;
    int good = 0;
    for (const auto& fr : frames) {
      if (fr.warmup) continue;
      ++total;
      if (fr.best && std::abs(fr.best->candidate.freq_hz / f - 1.0) < 0.005) ++good;
    }
    CHECK(good >= 0.95 * total);
  }
}

TEST_CASE("noise and silence give no confident pitch") {
  AnalyzerConfig config;
  config.spectrum = false;
  config.aligned_waveform = false;
  const auto noise = analyze_signal(config, testing::white_noise(1.0, 0.1, 5));
  int voiced = 0;
  int total = 0;
  for (const auto& f : noise) {
    if (f.warmup) continue;
    ++total;
    if (f.best) ++voiced;
  }
  CHECK(voiced <= total / 20);
  for (const auto& f : analyze_signal(config, std::vector<double>(22050, 0.0))) {
    CHECK(f.candidates.empty());
    CHECK_FALSE(f.best.has_value());
    CHECK(f.salience_db == kSalienceFloorDb);
    CHECK(f.waveform.samples.empty());
  }
}

TEST_CASE("frame times rise by one hop") {
  const auto frames = analyze_signal({}, testing::vowel(150.0, 0.5));
  REQUIRE(frames.size() > 10);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    CHECK(frames[i].sample_index - frames[i - 1].sample_index == 220);
    CHECK(frames[i].t_ms == doctest::Approx(frames[i - 1].t_ms + 220.0 / 44.1));
  }
  CHECK(frames.front().warmup);
  CHECK(frames.front().t_ms == 0.0);
  CHECK(frames[frames.size() / 2].spectrum_db.size() == 176);
  CHECK_FALSE(frames[frames.size() / 2].phase_maps.has_value());
}

TEST_CASE("results do not depend on the block size") {
  AnalyzerConfig config;
  config.phase_maps = true;
  const auto x = testing::vowel(196.0, 0.6);
  const auto whole = run_blocks(config, x, x.size());
  for (std::size_t block : {1u, 333u, 2048u}) {
    CAPTURE(block);
    const auto split = run_blocks(config, x, block);
    REQUIRE(split.size() == whole.size());
    for (std::size_t i = 0; i < whole.size(); ++i) {
      const auto& a = whole[i];
      const auto& b = split[i];
      REQUIRE(a.candidates.size() == b.candidates.size());
      for (std::size_t c = 0; c < a.candidates.size(); ++c) {
        CHECK(a.candidates[c].freq_hz == b.candidates[c].freq_hz);
        CHECK(a.candidates[c].snr_db == b.candidates[c].snr_db);
      }
      CHECK(a.level.dbfs_c_slow == b.level.dbfs_c_slow);
      CHECK(a.level.dbfs_peak == b.level.dbfs_peak);
      CHECK(a.spectrum_db == b.spectrum_db);
      CHECK(a.waveform.samples == b.waveform.samples);
    }
  }
}

TEST_CASE("a vowel-like tone reads its fundamental") {
  const auto frames = analyze_signal({}, testing::vowel(147.0, 1.0));
  std::vector<double> f0;
  for (const auto& f : frames) {
    if (!f.warmup && f.best) f0.push_back(f.best->candidate.freq_hz);
  }
  REQUIRE(f0.size() > frames.size() / 2);
  CHECK(testing::median(f0) == doctest::Approx(147.0).epsilon(0.005));
}

TEST_CASE("a mismatched table is refused") {
  AnalyzerConfig config;
  auto table = std::make_shared<CalibrationTable>(parse_calibration(embedded_calibration_text()));
  config.hop_samples = 441;
  CHECK_THROWS_AS(Analyzer(config, table), CalibrationMismatch);
}

}
