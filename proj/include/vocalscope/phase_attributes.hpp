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

// Unwrapping-free phase attributes of analytic channel outputs.

#include <complex>
#include <optional>
#include <vector>

#include "vocalscope/filterbank.hpp"

namespace vocalscope {

/// (f_s / 2 pi) * angle(y[n+1] / y[n]) in Hz, range (-f_s/2, f_s/2].
/// Empty when either output is below kMinValidMagnitude.
std::optional<double> instantaneous_frequency(std::complex<double> y_n,
                                              std::complex<double> y_np1,
                                              double sample_rate_hz);
std::optional<double> instantaneous_frequency(const ChannelOutputPair& pair,
                                              double sample_rate_hz);

/// -(1 / delta_omega) * angle(y_{k+1} / y_k) in seconds. An impulse at t0
/// observed at time t yields t0 - t.
std::optional<double> group_delay(std::complex<double> y_k,
                                  std::complex<double> y_kp1,
                                  double delta_omega);

/// Angle folded into (-pi, pi].
double principal_angle(std::complex<double> z);

struct ChannelAttributes {
  std::complex<double> output;
  double magnitude = 0.0;
  std::optional<double> phase;
  std::optional<double> inst_freq_hz;
  std::optional<double> norm_inst_freq;
  /// Hann-smoothed phase-advance rate; drives the fixed-point search.
  std::optional<double> smoothed_inst_freq_hz;
  std::optional<double> group_delay_s;
  /// Group delay in periods of the channel center frequency.
  std::optional<double> norm_group_delay;
  /// Filled by the SNR tracker.
  std::optional<double> snr_db;

  bool valid() const { return inst_freq_hz.has_value(); }
};

struct AttributeFrame {
  long long sample_index = 0;
  double hop_time_s = 0.0;
  bool warmup = false;
  bool tail = false;
  std::vector<ChannelAttributes> channels;
};

/// Per-channel phase, IF, GD and their normalized forms at one hop instant.
/// Channel k's group delay uses channels k and k+1; the top channel copies
/// its lower neighbor.
AttributeFrame assemble_attribute_frame(const ChannelBank& bank,
                                        const HopOutput& hop);

}  // namespace vocalscope
