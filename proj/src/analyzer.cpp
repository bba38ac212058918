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

#include "vocalscope/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <fmt/format.h>

namespace vocalscope {

AnalysisGeometry AnalyzerConfig::geometry() const {
  return {bank.window, bank.stretch, bank.sample_rate_hz, bank.per_octave, hop_samples,
          window_frames};
}

int hop_samples_from_ms(double hop_ms, double sample_rate_hz) {
  if (!(hop_ms > 0.0)) throw std::invalid_argument("hop must be positive");
  return std::max(1, static_cast<int>(std::floor(hop_ms * 1e-3 * sample_rate_hz + 1e-6)));
}

std::shared_ptr<const CalibrationTable> default_calibration(const AnalysisGeometry& geometry) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const CalibrationTable>> cache;
  const std::string key = fmt::format("{}|{}|{}|{}|{}|{}", describe(geometry.window),
                                      geometry.stretch, geometry.sample_rate_hz,
                                      geometry.per_octave, geometry.hop_samples,
                                      geometry.window_frames);
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::shared_ptr<const CalibrationTable> table;
  if (!embedded_calibration_text().empty()) {
    auto shipped = std::make_shared<CalibrationTable>(parse_calibration(embedded_calibration_text()));
    if (is_compatible(*shipped, geometry)) table = std::move(shipped);
  }
  if (!table) {
    CalibrationSetup setup;
    setup.window = geometry.window;
    setup.stretch = geometry.stretch;
    setup.sample_rate_hz = geometry.sample_rate_hz;
    setup.per_octave = geometry.per_octave;
    setup.hop_samples = geometry.hop_samples;
    setup.window_frames = geometry.window_frames;
    CalibrationOptions options;
    options.verify = false;
    options.created = "on demand";
    const auto grid = default_snr_grid();
    table = std::make_shared<CalibrationTable>(calibrate(setup, grid, options).table);
  }
  cache.emplace(key, table);
  return table;
}

double sample_linear(std::span<const double> x, double index) {
  const double f = std::floor(index);
  const auto i = static_cast<long long>(f);
  const double frac = index - f;
  auto at = [&x](long long k) {
    return k < 0 || k >= static_cast<long long>(x.size()) ? 0.0 : x[static_cast<std::size_t>(k)];
  };
  const double a = at(i);
  return frac == 0.0 ? a : a + frac * (at(i + 1) - a);
}

AlignedWaveform aligned_snippet(std::span<const double> history, long long history_start,
                                long long end, double f0_hz, double phase_at_end,
                                double sample_rate_hz, double periods) {
  if (!(f0_hz > 0.0)) throw std::invalid_argument("snippet needs a positive f0");
  AlignedWaveform w;
  const double period = sample_rate_hz / f0_hz;
  const double u = -phase_at_end / (2.0 * std::numbers::pi) * period;
  const double k = std::floor(-periods - u / period);
  w.start_sample = static_cast<double>(end) + u + k * period;
  w.period_samples = period;
  const auto length = static_cast<std::size_t>(std::llround(periods * period));
  w.samples.resize(length);
  const double offset = w.start_sample - static_cast<double>(history_start);
  for (std::size_t i = 0; i < length; ++i) {
    w.samples[i] = sample_linear(history, offset + static_cast<double>(i));
  }
  return w;
}

std::vector<double> decimate_waveform(std::span<const double> samples, std::size_t points) {
  std::vector<double> out;
  if (samples.empty() || points == 0) return out;
  if (points == 1) return {samples.front()};
  out.resize(points);
  const double step = static_cast<double>(samples.size() - 1) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = sample_linear(samples, step * static_cast<double>(i));
  }
  return out;
}

namespace {

StreamOptions stream_options(const AnalyzerConfig& config) {
  StreamOptions options;
  options.hop_samples = config.hop_samples;
  options.smoothed_if = true;
  options.smoothing_spans = config.smoothing_spans;
  return options;
}

std::shared_ptr<const CalibrationTable> checked_table(const AnalyzerConfig& config,
                                                      std::shared_ptr<const CalibrationTable> table) {
  if (!table) table = default_calibration(config.geometry());
  check_compatible(*table, config.geometry());
  return table;
}

}  // namespace

Analyzer::Analyzer(const AnalyzerConfig& config, std::shared_ptr<const CalibrationTable> table)
    : config_(config),
      bank_(std::make_shared<const ChannelBank>(config.bank)),
      table_(checked_table(config, std::move(table))),
      stream_(bank_, stream_options(config)),
      tracker_(bank_->size(), config.window_frames),
      level_(config.bank.sample_rate_hz) {
  const double fs = config_.bank.sample_rate_hz;
  if (config_.spectrum) {
    SpectrumSpec spec;
    spec.sample_rate_hz = fs;
    spec.f_hi_hz = std::min(spec.f_hi_hz, fs / 2.0);
    spectrum_ = std::make_unique<SpectrumAnalyzer>(spec);
    keep_back_ = spec.fft_size;
  }
  const double lowest = config_.bank.f_lo_hz * std::exp2(-1.0 / 12.0);
  keep_back_ = std::max(keep_back_,
                        static_cast<long long>(std::ceil((config_.snippet_periods + 1.0) * fs / lowest)) + 2);
  keep_back_ += config_.hop_samples;
}

double Analyzer::sample(long long i) const {
  const long long offset = i - history_start_;
  if (i < 0 || offset < 0 || offset >= static_cast<long long>(history_.size())) return 0.0;
  return history_[static_cast<std::size_t>(offset)];
}

void Analyzer::push(std::span<const double> samples) {
  history_.insert(history_.end(), samples.begin(), samples.end());
  stream_.push(samples);
}

void Analyzer::finish() { stream_.finish(); }

void Analyzer::trim_history(long long next_instant) {
  const long long keep_from = next_instant - keep_back_;
  const long long excess = keep_from - history_start_;
  if (excess > (1 << 16)) {
    history_.erase(history_.begin(), history_.begin() + excess);
    history_start_ += excess;
  }
}

std::optional<AnalysisFrame> Analyzer::pop() {
  auto hop = stream_.pop();
  if (!hop) return std::nullopt;
  const long long n = hop->sample_index;
  const double fs = config_.bank.sample_rate_hz;

  AttributeFrame attrs = assemble_attribute_frame(*bank_, *hop);
  tracker_.update(attrs, *table_);

  AnalysisFrame frame;
  frame.sample_index = n;
  frame.t_ms = static_cast<double>(n) * 1000.0 / fs;
  frame.warmup = hop->warmup;
  frame.candidates = select_candidates(find_fixed_points(attrs, *bank_));
  frame.best = best_candidate(frame.candidates, config_.salience_threshold_db);
  frame.salience_db = salience(frame.candidates);

  if (n > level_position_) {
    std::vector<double> block(static_cast<std::size_t>(n - level_position_));
    for (std::size_t i = 0; i < block.size(); ++i) {
      block[i] = sample(level_position_ + static_cast<long long>(i));
    }
    frame.level = level_.process(block);
    level_position_ = n;
  } else {
    frame.level = level_.last();
  }

  if (spectrum_) {
    const int size = spectrum_->spec().fft_size;
    std::vector<double> window(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) window[static_cast<std::size_t>(i)] = sample(n - size + i);
    frame.spectrum_db = spectrum_->power_db(window);
  }

  if (config_.aligned_waveform && frame.best) {
    const double f0 = frame.best->candidate.freq_hz;
    std::size_t nearest = 0;
    for (std::size_t k = 1; k < bank_->size(); ++k) {
      if (std::abs(std::log(bank_->center_hz(k) / f0)) <
          std::abs(std::log(bank_->center_hz(nearest) / f0))) {
        nearest = k;
      }
    }
    if (const auto& phase = attrs.channels[nearest].phase) {
      frame.waveform = aligned_snippet(history_, history_start_, n, f0, *phase, fs,
                                       config_.snippet_periods);
      frame.waveform.channel_index = static_cast<int>(nearest);
    }
  }

  if (config_.phase_maps) {
    PhaseMaps maps;
    for (const auto& ch : attrs.channels) {
      maps.phase.push_back(ch.phase);
      maps.norm_inst_freq.push_back(ch.norm_inst_freq);
      maps.norm_group_delay.push_back(ch.norm_group_delay);
    }
    frame.phase_maps = std::move(maps);
  }

  trim_history(n + config_.hop_samples);
  return frame;
}

std::vector<AnalysisFrame> Analyzer::drain() {
  std::vector<AnalysisFrame> frames;
  while (auto f = pop()) frames.push_back(std::move(*f));
  return frames;
}

void Analyzer::reset() {
  stream_.reset();
  tracker_.reset();
  level_.reset();
  history_.clear();
  history_start_ = 0;
  level_position_ = 0;
}

std::vector<AnalysisFrame> analyze_signal(const AnalyzerConfig& config,
                                          std::span<const double> audio,
                                          std::shared_ptr<const CalibrationTable> table) {
  Analyzer analyzer(config, std::move(table));
  analyzer.push(audio);
  analyzer.finish();
  return analyzer.drain();
}

}  // namespace vocalscope
