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

// SNR estimation from the hop-to-hop variation of normalized instantaneous
// frequency and group delay, plus the calibration that maps the raw
// variation onto dB.
//
// The calibration synthesizes a sinusoid plus white Gaussian noise at known
// SNRs, runs the on-center channel (and its upper neighbor, for group
// delay) and records the median variation per SNR. The resulting table is a
// monotone piecewise-linear map from log(variation) to dB.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vocalscope/envelope.hpp"
#include "vocalscope/phase_attributes.hpp"

namespace vocalscope {

struct VariationMeasure {
  int channel_index = 0;
  double value = 0.0;
  int window_frames = 0;
};

/// sqrt(mean((d_nu^2 + d_tau^2) / 2)) over the first differences of the last
/// window_frames entries of each series. Throws std::invalid_argument when
/// window_frames < 2 or a series is shorter than the window.
VariationMeasure mix_variation(std::span<const double> norm_inst_freq,
                               std::span<const double> norm_group_delay,
                               int window_frames, int channel_index = 0);

/// How the calibration mixture's SNR is defined.
enum class SnrReference {
  in_band,    // sinusoid vs noise power at the on-center channel output
  full_band,  // sinusoid vs noise power at the sample level
};

std::string_view to_string(SnrReference reference);
SnrReference parse_snr_reference(std::string_view name);

struct CalibrationSetup {
  WindowSpec window;
  double stretch = kDefaultStretch;
  double sample_rate_hz = 44100.0;
  int per_octave = 6;
  int hop_samples = 220;
  int window_frames = 4;
  double tone_hz = 120.0;
  double channel_hz = 120.0;
  SnrReference reference = SnrReference::in_band;
  double duration_s = 2.0;
  std::uint64_t seed = 1;
};

struct CalibrationKnot {
  double variation = 0.0;
  double snr_db = 0.0;
  bool flagged = false;
};

inline constexpr double kSnrCeilingDb = 80.0;
inline constexpr int kCalibrationVersion = 1;

struct CalibrationTable {
  int version = kCalibrationVersion;
  CalibrationSetup setup;
  std::string created;
  /// Ascending dB, strictly decreasing variation.
  std::vector<CalibrationKnot> knots;

  double min_snr_db() const;
  double max_snr_db() const;
  bool any_flagged() const;
};

/// Raised when a table was produced for a different bank/hop configuration.
class CalibrationMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The analysis parameters a calibration table must agree with.
struct AnalysisGeometry {
  WindowSpec window;
  double stretch = kDefaultStretch;
  double sample_rate_hz = 44100.0;
  int per_octave = 6;
  int hop_samples = 220;
  int window_frames = 4;
};

/// Throws CalibrationMismatch with the first disagreeing field.
void check_compatible(const CalibrationTable& table, const AnalysisGeometry& geometry);
bool is_compatible(const CalibrationTable& table, const AnalysisGeometry& geometry);

/// Monotone interpolation of the table in log(variation), clamped to
/// [table minimum, 80 dB].
double estimate_snr(const VariationMeasure& variation, const CalibrationTable& table);
double estimate_snr(const VariationMeasure& variation, const CalibrationTable& table,
                    const AnalysisGeometry& geometry);

/// Per-frame variations of the calibration channel for one synthetic
/// mixture, after warm-up.
std::vector<double> mixture_variations(const CalibrationSetup& setup, double snr_db,
                                       std::uint64_t seed);
/// Median of mixture_variations.
double measure_variation(const CalibrationSetup& setup, double snr_db, std::uint64_t seed);
/// Median of the per-frame SNR estimates for a fresh mixture.
double measure_snr(const CalibrationSetup& setup, const CalibrationTable& table,
                   double snr_db, std::uint64_t seed);

struct CalibrationPoint {
  double true_snr_db = 0.0;
  double variation = 0.0;
  bool pooled = false;
  std::optional<double> verified_snr_db;
  bool flagged = false;
};

struct CalibrationOptions {
  /// Relative rise of the measured variation tolerated (and pooled) before
  /// the curve counts as non-monotone.
  double monotone_tolerance = 0.02;
  bool verify = true;
  std::uint64_t verify_seed = 1001;
  double error_tolerance_db = 3.0;
  std::string created;
};

struct CalibrationReport {
  CalibrationTable table;
  std::vector<CalibrationPoint> points;
  double max_abs_error_db = 0.0;
};

class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, std::vector<CalibrationPoint> offending)
      : std::runtime_error(what), offending_(std::move(offending)) {}
  const std::vector<CalibrationPoint>& offending() const { return offending_; }

 private:
  std::vector<CalibrationPoint> offending_;
};

/// 0 .. 80 dB in 5 dB steps. Below about -10 dB the variation saturates.
std::vector<double> default_snr_grid();

/// Throws std::invalid_argument for a grid that does not cover [10, 80] dB
/// in steps of at most 5 dB, and CalibrationError for a non-monotone curve.
CalibrationReport calibrate(const CalibrationSetup& setup,
                            std::span<const double> snr_grid,
                            const CalibrationOptions& options = {});

void write_calibration(std::ostream& out, const CalibrationTable& table);
std::string format_calibration(const CalibrationTable& table);
/// Throws std::runtime_error on malformed input.
CalibrationTable read_calibration(std::istream& in);
CalibrationTable parse_calibration(std::string_view text);

/// Running per-channel variation over the last window_frames hops.
class ChannelSnrTracker {
 public:
  ChannelSnrTracker(std::size_t channels, int window_frames);

  /// Records this frame's normalized attributes and fills snr_db on every
  /// channel whose whole window is valid.
  void update(AttributeFrame& frame, const CalibrationTable& table);
  /// Variation of channel k over the current window, if valid.
  std::optional<VariationMeasure> variation(std::size_t k) const;
  void reset();

 private:
  struct History {
    std::vector<double> norm_if;
    std::vector<double> norm_gd;
    int valid_run = 0;
  };
  int window_frames_;
  std::vector<History> history_;
};

}  // namespace vocalscope
