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

// The per-hop analysis pipeline: filterbank -> phase attributes -> SNR ->
// f0 candidates, with levels, a short-window spectrum and a phase-aligned
// waveform snippet.

#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vocalscope/f0_extractor.hpp"
#include "vocalscope/filterbank.hpp"
#include "vocalscope/level_meter.hpp"
#include "vocalscope/snr_estimator.hpp"
#include "vocalscope/spectrum.hpp"

namespace vocalscope {

struct AnalyzerConfig {
  BankSpec bank;
  int hop_samples = 220;
  int window_frames = 4;
  double salience_threshold_db = kDefaultSalienceThresholdDb;
  double smoothing_spans = 2.0;
  bool spectrum = true;
  bool aligned_waveform = true;
  bool phase_maps = false;
  double snippet_periods = 4.0;

  AnalysisGeometry geometry() const;
};

/// hop_ms -> whole samples at the bank rate (rounded down), at least one.
int hop_samples_from_ms(double hop_ms, double sample_rate_hz);

struct AlignedWaveform {
  /// Fractional input sample index of the first point.
  double start_sample = 0.0;
  double period_samples = 0.0;
  int channel_index = 0;
  std::vector<double> samples;
};

struct PhaseMaps {
  std::vector<std::optional<double>> phase;
  std::vector<std::optional<double>> norm_inst_freq;
  std::vector<std::optional<double>> norm_group_delay;
};

struct AnalysisFrame {
  long long sample_index = 0;
  double t_ms = 0.0;
  bool warmup = false;
  /// Sorted by SNR descending, at most four.
  std::vector<F0Candidate> candidates;
  std::optional<BestCandidate> best;
  double salience_db = kSalienceFloorDb;
  LevelFrame level;
  std::vector<double> spectrum_db;
  AlignedWaveform waveform;
  std::optional<PhaseMaps> phase_maps;
};

/// The six-term table shipped with the library if it matches the geometry,
/// otherwise one calibrated on first use (and cached).
std::shared_ptr<const CalibrationTable> default_calibration(const AnalysisGeometry& geometry);
/// The embedded table text (empty if the build had none).
std::string_view embedded_calibration_text();

/// Fractional-index linear interpolation; zero outside the signal.
double sample_linear(std::span<const double> x, double index);

/// ~periods fundamental periods ending before `end`, starting where the
/// fundamental's analytic phase (phase_at_end observed at sample `end`) is
/// zero.
AlignedWaveform aligned_snippet(std::span<const double> history, long long history_start,
                                long long end, double f0_hz, double phase_at_end,
                                double sample_rate_hz, double periods = 4.0);

/// Evenly resampled copy with `points` values spanning the snippet.
std::vector<double> decimate_waveform(std::span<const double> samples, std::size_t points);

class Analyzer {
 public:
  /// A null table selects default_calibration(config.geometry()).
  explicit Analyzer(const AnalyzerConfig& config,
                    std::shared_ptr<const CalibrationTable> table = nullptr);

  void push(std::span<const double> samples);
  void finish();
  std::optional<AnalysisFrame> pop();
  /// Every frame currently available.
  std::vector<AnalysisFrame> drain();
  void reset();

  const AnalyzerConfig& config() const { return config_; }
  const ChannelBank& bank() const { return *bank_; }
  const CalibrationTable& calibration() const { return *table_; }
  LevelMeter& level_meter() { return level_; }
  const LevelMeter& level_meter() const { return level_; }
  long long lookahead_samples() const { return stream_.lookahead_samples(); }

 private:
  double sample(long long i) const;
  void trim_history(long long next_instant);

  AnalyzerConfig config_;
  std::shared_ptr<const ChannelBank> bank_;
  std::shared_ptr<const CalibrationTable> table_;
  FilterbankStream stream_;
  ChannelSnrTracker tracker_;
  LevelMeter level_;
  std::unique_ptr<SpectrumAnalyzer> spectrum_;
  std::vector<double> history_;
  long long history_start_ = 0;
  long long level_position_ = 0;
  long long keep_back_ = 0;
};

/// Offline run over a whole signal.
std::vector<AnalysisFrame> analyze_signal(const AnalyzerConfig& config,
                                          std::span<const double> audio,
                                          std::shared_ptr<const CalibrationTable> table = nullptr);

}  // namespace vocalscope
