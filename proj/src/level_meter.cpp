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

#include "vocalscope/level_meter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <fmt/format.h>

namespace vocalscope {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPoleLowHz = 20.598997;
constexpr double kPoleHighHz = 12194.217;
constexpr std::array<double, 5> kReferenceLevels = {60.0, 65.0, 70.0, 75.0, 80.0};

std::complex<double> response(const Biquad& s, double omega) {
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> z2 = z1 * z1;
  return (s.b[0] + s.b[1] * z1 + s.b[2] * z2) / (s.a[0] + s.a[1] * z1 + s.a[2] * z2);
}

// (s / (s + w1))^2 by the bilinear transform, pre-warped at 1 kHz.
Biquad low_corner_section(double fs) {
  const double w0 = 2.0 * kPi * 1000.0;
  const double w1 = 2.0 * kPi * kPoleLowHz;
  const double k = w0 / std::tan(w0 / (2.0 * fs));
  const double b0 = k / (k + w1);
  const double a1 = (w1 - k) / (k + w1);
  Biquad s;
  s.b = {b0 * b0, -2.0 * b0 * b0, b0 * b0};
  s.a = {1.0, 2.0 * a1, a1 * a1};
  return s;
}

// (w4 / (s + w4))^2 with matched poles and a numerator fitted to the analog
// squared magnitude at DC, fs/4 and 0.35 fs.
Biquad high_corner_section(double fs) {
  const double w4 = 2.0 * kPi * kPoleHighHz;
  const double p = std::exp(-w4 / fs);
  Biquad s;
  s.a = {1.0, -2.0 * p, p * p};

  const std::array<double, 3> freqs = {0.0, 0.25 * fs, 0.35 * fs};
  double m[3][4];
  for (int i = 0; i < 3; ++i) {
    const double f = freqs[static_cast<std::size_t>(i)];
    const double phi1 = std::pow(std::sin(kPi * f / fs), 2);
    const double phi0 = 1.0 - phi1;
    const double w = 2.0 * kPi * f;
    const double analog = std::pow(w4 * w4 / (w4 * w4 + w * w), 2);
    Biquad poles;
    poles.a = s.a;
    const double denom = std::norm(1.0 / response(poles, 2.0 * kPi * f / fs));
    m[i][0] = phi0;
    m[i][1] = phi1;
    m[i][2] = 4.0 * phi0 * phi1;
    m[i][3] = analog * denom;
  }
  // Gaussian elimination with partial pivoting.
  for (int c = 0; c < 3; ++c) {
    int pivot = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[pivot][c])) pivot = r;
    }
    for (int k = 0; k < 4; ++k) std::swap(m[c][k], m[pivot][k]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double factor = m[r][c] / m[c][c];
      for (int k = c; k < 4; ++k) m[r][k] -= factor * m[c][k];
    }
  }
  const double big0 = m[0][3] / m[0][0];
  const double big1 = m[1][3] / m[1][1];
  const double big2 = m[2][3] / m[2][2];
  const double r0 = std::sqrt(std::max(big0, 0.0));
  const double r1 = std::sqrt(std::max(big1, 0.0));
  const double w = 0.5 * (r0 + r1);
  const double b0 = 0.5 * (w + std::sqrt(std::max(w * w + big2, 0.0)));
  s.b = {b0, 0.5 * (r0 - r1), -big2 / (4.0 * b0)};
  return s;
}

double time_constant_coeff(double tau_s, double fs) {
  return 1.0 - std::exp(-1.0 / (tau_s * fs));
}

}  // namespace

CWeighting::CWeighting(double sample_rate_hz) : fs_(sample_rate_hz) {
  if (!(sample_rate_hz >= kMinCWeightingRate)) {
    throw std::invalid_argument(fmt::format(
        "C-weighting needs a sample rate of at least {} Hz, got {}", kMinCWeightingRate,
        sample_rate_hz));
  }
  sections_ = {low_corner_section(fs_), high_corner_section(fs_)};
  const double omega = 2.0 * kPi * 1000.0 / fs_;
  const double g = std::abs(response(sections_[0], omega) * response(sections_[1], omega));
  for (auto& b : sections_[0].b) b /= g;
}

double CWeighting::process(double x) {
  // Transposed direct form II.
  double v = x;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const auto& s = sections_[i];
    auto& z = state_[i];
    const double y = s.b[0] * v + z[0];
    z[0] = s.b[1] * v - s.a[1] * y + z[1];
    z[1] = s.b[2] * v - s.a[2] * y;
    v = y;
  }
  return v;
}

void CWeighting::process(std::span<const double> in, std::span<double> out) {
  if (out.size() < in.size()) throw std::invalid_argument("output span too short");
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = process(in[i]);
}

std::vector<double> CWeighting::process(std::span<const double> in) {
  std::vector<double> out(in.size());
  process(in, out);
  return out;
}

void CWeighting::reset() { state_ = {}; }

double CWeighting::gain_db(double freq_hz) const {
  const double omega = 2.0 * kPi * freq_hz / fs_;
  return 20.0 * std::log10(std::abs(response(sections_[0], omega) * response(sections_[1], omega)));
}

std::vector<double> c_weight(std::span<const double> samples, double sample_rate_hz) {
  CWeighting filter(sample_rate_hz);
  return filter.process(samples);
}

std::span<const double> default_reference_levels() { return kReferenceLevels; }

SplCalibration calibrate_spl(double measured_dbfs_c_slow, double reference_spl_db,
                             std::optional<double> slow_variance,
                             std::span<const double> allowed_references,
                             std::string timestamp) {
  if (std::find(allowed_references.begin(), allowed_references.end(), reference_spl_db) ==
      allowed_references.end()) {
    throw CalibrationRejected(
        fmt::format("reference level {} dB is not an offered calibration level", reference_spl_db),
        slow_variance);
  }
  if (!slow_variance) {
    throw CalibrationRejected("not enough signal yet to judge stability", std::nullopt);
  }
  if (!(*slow_variance < kMaxStableVariance)) {
    throw CalibrationRejected(
        fmt::format("signal unstable: slow-level variance {:.3f} dB^2 over {} s", *slow_variance,
                    kStabilityWindowS),
        slow_variance);
  }
  if (!std::isfinite(measured_dbfs_c_slow) || measured_dbfs_c_slow <= kLevelFloorDb) {
    throw CalibrationRejected("no signal to calibrate against", slow_variance);
  }
  return {reference_spl_db - measured_dbfs_c_slow, reference_spl_db, std::move(timestamp)};
}

double amplitude_db(double amplitude) {
  if (!(amplitude > 0.0)) return kLevelFloorDb;
  return std::max(kLevelFloorDb, 20.0 * std::log10(amplitude));
}

double power_db(double power) {
  if (!(power > 0.0)) return kLevelFloorDb;
  return std::max(kLevelFloorDb, 10.0 * std::log10(power));
}

LevelMeter::LevelMeter(double sample_rate_hz)
    : fs_(sample_rate_hz),
      weighting_(sample_rate_hz),
      fast_coeff_(time_constant_coeff(kFastTimeConstantS, sample_rate_hz)),
      slow_coeff_(time_constant_coeff(kSlowTimeConstantS, sample_rate_hz)),
      smooth_coeff_(time_constant_coeff(kSmoothedRmsTimeConstantS, sample_rate_hz)) {}

LevelFrame LevelMeter::process(std::span<const double> block) {
  if (block.empty()) throw std::invalid_argument("level block must hold at least one sample");
  double peak = 0.0;
  double energy = 0.0;
  for (const double x : block) {
    peak = std::max(peak, std::abs(x));
    energy += x * x;
    smooth_ms_ += smooth_coeff_ * (x * x - smooth_ms_);
    const double c = weighting_.process(x);
    fast_ms_ += fast_coeff_ * (c * c - fast_ms_);
    slow_ms_ += slow_coeff_ * (c * c - slow_ms_);
  }
  samples_ += static_cast<long long>(block.size());

  LevelFrame frame;
  frame.dbfs_peak = amplitude_db(peak);
  frame.dbfs_rms = power_db(energy / static_cast<double>(block.size()));
  frame.dbfs_rms_smoothed = power_db(smooth_ms_);
  frame.dbfs_c_fast = power_db(fast_ms_);
  frame.dbfs_c_slow = power_db(slow_ms_);
  if (calibration_) {
    frame.calibrated = true;
    frame.spl_fast_db = frame.dbfs_c_fast + calibration_->offset_db;
    frame.spl_slow_db = frame.dbfs_c_slow + calibration_->offset_db;
  }

  slow_history_.emplace_back(samples_, frame.dbfs_c_slow);
  const auto window = static_cast<long long>(std::llround(kStabilityWindowS * fs_));
  while (slow_history_.size() > 1 && slow_history_[1].first <= samples_ - window) {
    slow_history_.pop_front();
  }
  last_ = frame;
  return frame;
}

void LevelMeter::reset() {
  weighting_.reset();
  fast_ms_ = slow_ms_ = smooth_ms_ = 0.0;
  samples_ = 0;
  slow_history_.clear();
  last_ = {};
}

void LevelMeter::set_calibration(std::optional<SplCalibration> calibration) {
  calibration_ = std::move(calibration);
}

std::optional<double> LevelMeter::slow_variance() const {
  const auto window = static_cast<long long>(std::llround(kStabilityWindowS * fs_));
  if (samples_ < window || slow_history_.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (const auto& [_, v] : slow_history_) mean += v;
  mean /= static_cast<double>(slow_history_.size());
  double var = 0.0;
  for (const auto& [_, v] : slow_history_) var += (v - mean) * (v - mean);
  return var / static_cast<double>(slow_history_.size());
}

}  // namespace vocalscope
