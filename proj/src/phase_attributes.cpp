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

#include "vocalscope/phase_attributes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vocalscope {

double principal_angle(std::complex<double> z) {
  const double a = std::arg(z);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

std::optional<double> instantaneous_frequency(std::complex<double> y_n,
                                              std::complex<double> y_np1,
                                              double sample_rate_hz) {
  if (std::abs(y_n) < kMinValidMagnitude || std::abs(y_np1) < kMinValidMagnitude) {
    return std::nullopt;
  }
  const double advance = principal_angle(y_np1 * std::conj(y_n));
  return advance * sample_rate_hz / (2.0 * std::numbers::pi);
}

std::optional<double> instantaneous_frequency(const ChannelOutputPair& pair,
                                              double sample_rate_hz) {
  return instantaneous_frequency(pair.y_n, pair.y_np1, sample_rate_hz);
}

std::optional<double> group_delay(std::complex<double> y_k,
                                  std::complex<double> y_kp1,
                                  double delta_omega) {
  if (!(delta_omega > 0.0)) {
    throw std::invalid_argument("channel spacing must be positive");
  }
  if (std::abs(y_k) < kMinValidMagnitude || std::abs(y_kp1) < kMinValidMagnitude) {
    return std::nullopt;
  }
  return -principal_angle(y_kp1 * std::conj(y_k)) / delta_omega;
}

AttributeFrame assemble_attribute_frame(const ChannelBank& bank,
                                        const HopOutput& hop) {
  if (hop.pairs.size() != bank.size()) {
    throw std::invalid_argument("hop output does not cover every channel");
  }
  const double fs = bank.sample_rate_hz();
  AttributeFrame frame;
  frame.sample_index = hop.sample_index;
  frame.hop_time_s = hop.time_s;
  frame.warmup = hop.warmup;
  frame.tail = hop.tail;
  frame.channels.resize(bank.size());

  double peak = 0.0;
  for (const auto& pair : hop.pairs) peak = std::max(peak, std::abs(pair.y_n));
  const double floor =
      std::max(kMinValidMagnitude, peak * std::pow(10.0, kRelativeMagnitudeFloorDb / 20.0));
  std::vector<bool> usable(bank.size());

  for (std::size_t k = 0; k < bank.size(); ++k) {
    const auto& pair = hop.pairs[k];
    auto& attr = frame.channels[k];
    const double center = bank.center_hz(k);
    attr.output = pair.y_n;
    attr.magnitude = std::abs(pair.y_n);
    usable[k] = attr.magnitude >= floor;
    if (!usable[k]) continue;
    attr.phase = principal_angle(pair.y_n);
    attr.inst_freq_hz = instantaneous_frequency(pair, fs);
    if (attr.inst_freq_hz) attr.norm_inst_freq = *attr.inst_freq_hz / center;
    if (!hop.smoothed_if_hz.empty()) attr.smoothed_inst_freq_hz = hop.smoothed_if_hz[k];
  }

  if (bank.size() >= 2) {
    for (std::size_t k = 0; k + 1 < bank.size(); ++k) {
      if (!usable[k] || !usable[k + 1]) continue;
      frame.channels[k].group_delay_s = group_delay(
          hop.pairs[k].y_n, hop.pairs[k + 1].y_n, bank.delta_omega(k));
    }
    frame.channels.back().group_delay_s =
        frame.channels[bank.size() - 2].group_delay_s;
  }
  for (std::size_t k = 0; k < bank.size(); ++k) {
    auto& attr = frame.channels[k];
    if (attr.group_delay_s) attr.norm_group_delay = *attr.group_delay_s * bank.center_hz(k);
  }
  return frame;
}

}  // namespace vocalscope
