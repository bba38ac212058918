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

// C-weighted level meter with fast/slow exponential ballistics, dBFS
// peak/RMS indicators and a single-offset SPL calibration.

#include <array>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vocalscope {

inline constexpr double kLevelFloorDb = -100.0;
inline constexpr double kFastTimeConstantS = 0.125;
inline constexpr double kSlowTimeConstantS = 1.0;
inline constexpr double kSmoothedRmsTimeConstantS = 0.5;
inline constexpr double kStabilityWindowS = 2.0;
inline constexpr double kMaxStableVariance = 1.0;
inline constexpr double kMinCWeightingRate = 32000.0;

/// Second-order section, a0 = 1.
struct Biquad {
  std::array<double, 3> b{1.0, 0.0, 0.0};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

/// Digital C-weighting. The low-frequency pole pair is discretized by the
/// bilinear transform pre-warped at 1 kHz; the high-frequency pair uses a
/// matched-magnitude section so the response stays within a few hundredths
/// of a dB of the analog curve up to 16 kHz at 44.1 kHz.
class CWeighting {
 public:
  /// Throws std::invalid_argument below 32 kHz.
  explicit CWeighting(double sample_rate_hz);

  double process(double x);
  void process(std::span<const double> in, std::span<double> out);
  std::vector<double> process(std::span<const double> in);
  void reset();

  /// Magnitude response of the digital filter.
  double gain_db(double freq_hz) const;
  const std::array<Biquad, 2>& sections() const { return sections_; }
  double sample_rate_hz() const { return fs_; }

 private:
  double fs_;
  std::array<Biquad, 2> sections_;
  std::array<std::array<double, 2>, 2> state_{};
};

/// Convenience: C-weight a whole signal from rest.
std::vector<double> c_weight(std::span<const double> samples, double sample_rate_hz);

struct SplCalibration {
  /// SPL = C-weighted dBFS + offset.
  double offset_db = 0.0;
  double reference_spl_db = 70.0;
  std::string timestamp;
};

class CalibrationRejected : public std::runtime_error {
 public:
  CalibrationRejected(const std::string& what, std::optional<double> variance)
      : std::runtime_error(what), variance_(variance) {}
  /// Measured slow-level variance in dB^2, when one was available.
  std::optional<double> variance() const { return variance_; }

 private:
  std::optional<double> variance_;
};

/// Reference levels offered by default.
std::span<const double> default_reference_levels();

/// Throws CalibrationRejected when the variance is missing or not below
/// kMaxStableVariance, or the reference is not in allowed_references.
SplCalibration calibrate_spl(double measured_dbfs_c_slow, double reference_spl_db,
                             std::optional<double> slow_variance,
                             std::span<const double> allowed_references = default_reference_levels(),
                             std::string timestamp = {});

struct LevelFrame {
  double dbfs_peak = kLevelFloorDb;
  double dbfs_rms = kLevelFloorDb;
  double dbfs_rms_smoothed = kLevelFloorDb;
  double dbfs_c_fast = kLevelFloorDb;
  double dbfs_c_slow = kLevelFloorDb;
  std::optional<double> spl_fast_db;
  std::optional<double> spl_slow_db;
  bool calibrated = false;
};

/// dB of an amplitude ratio, clamped at the display floor.
double amplitude_db(double amplitude);
/// dB of a power ratio, clamped at the display floor.
double power_db(double power);

class LevelMeter {
 public:
  explicit LevelMeter(double sample_rate_hz);

  /// Consumes one block (length >= 1) and returns the readings at its end.
  LevelFrame process(std::span<const double> block);
  void reset();

  void set_calibration(std::optional<SplCalibration> calibration);
  const std::optional<SplCalibration>& calibration() const { return calibration_; }

  /// Variance (dB^2) of the block-end slow readings over the last 2 s, once
  /// that much signal has been seen.
  std::optional<double> slow_variance() const;
  const LevelFrame& last() const { return last_; }
  double sample_rate_hz() const { return fs_; }

 private:
  double fs_;
  CWeighting weighting_;
  double fast_coeff_;
  double slow_coeff_;
  double smooth_coeff_;
  double fast_ms_ = 0.0;
  double slow_ms_ = 0.0;
  double smooth_ms_ = 0.0;
  long long samples_ = 0;
  std::deque<std::pair<long long, double>> slow_history_;
  std::optional<SplCalibration> calibration_;
  LevelFrame last_;
};

}  // namespace vocalscope
