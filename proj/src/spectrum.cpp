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

#include "vocalscope/spectrum.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

namespace vocalscope {
namespace {

// Plan creation in FFTW is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SpectrumAnalyzer::Plan {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit Plan(int n) {
    std::lock_guard lock(planner_mutex());
    in = fftw_alloc_real(static_cast<std::size_t>(n));
    out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    if (!in || !out || !plan) throw std::runtime_error("FFTW plan creation failed");
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    if (plan) fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
};

SpectrumAnalyzer::SpectrumAnalyzer(const SpectrumSpec& spec) : spec_(spec) {
  if (spec.fft_size < 16 || spec.fft_size % 2 != 0) {
    throw std::invalid_argument("FFT size must be even and at least 16");
  }
  if (!(spec.f_lo_hz > 0.0) || !(spec.f_hi_hz > spec.f_lo_hz) ||
      spec.f_hi_hz > spec.sample_rate_hz / 2.0 || spec.per_octave < 1) {
    throw std::invalid_argument("invalid spectrum band layout");
  }
  const auto n = static_cast<std::size_t>(spec.fft_size);
  window_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    window_[i] = s * s;
  }
  const auto bands = static_cast<std::size_t>(
      std::ceil(spec.per_octave * std::log2(spec.f_hi_hz / spec.f_lo_hz) - 1e-9));
  for (std::size_t i = 0; i <= bands; ++i) {
    edges_.push_back(spec.f_lo_hz * std::exp2(static_cast<double>(i) / spec.per_octave));
  }
  for (std::size_t i = 0; i < bands; ++i) centers_.push_back(std::sqrt(edges_[i] * edges_[i + 1]));
  plan_ = std::make_unique<Plan>(spec.fft_size);
}

SpectrumAnalyzer::~SpectrumAnalyzer() = default;

std::vector<double> SpectrumAnalyzer::bin_power(std::span<const double> frame) {
  const auto n = static_cast<std::size_t>(spec_.fft_size);
  if (frame.size() != n) throw std::invalid_argument("spectrum frame has the wrong length");
  double gain = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    plan_->in[i] = frame[i] * window_[i];
    gain += window_[i];
  }
  fftw_execute(plan_->plan);
  const double scale = 2.0 / gain;
  std::vector<double> power(n / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double re = plan_->out[k][0] * scale;
    const double im = plan_->out[k][1] * scale;
    power[k] = re * re + im * im;
  }
  return power;
}

std::vector<double> SpectrumAnalyzer::power_db(std::span<const double> frame) {
  const auto power = bin_power(frame);
  const double bin_hz = spec_.sample_rate_hz / spec_.fft_size;
  std::vector<double> out(centers_.size());
  for (std::size_t b = 0; b < centers_.size(); ++b) {
    const auto first = static_cast<std::size_t>(std::ceil(edges_[b] / bin_hz));
    const auto last = static_cast<std::size_t>(std::ceil(edges_[b + 1] / bin_hz));
    double p = 0.0;
    if (last > first) {
      for (std::size_t k = first; k < last && k < power.size(); ++k) p += power[k];
      p /= static_cast<double>(last - first);
    } else {
      const double pos = centers_[b] / bin_hz;
      const auto k = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(k);
      p = power[k] * (1.0 - frac) + power[std::min(k + 1, power.size() - 1)] * frac;
    }
    out[b] = p > 0.0 ? std::max(spec_.floor_db, 10.0 * std::log10(p)) : spec_.floor_db;
  }
  return out;
}

}  // namespace vocalscope
