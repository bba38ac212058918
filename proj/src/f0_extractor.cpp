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

#include "vocalscope/f0_extractor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace vocalscope {
namespace {

std::optional<double> channel_if(const ChannelAttributes& attr) {
  if (attr.smoothed_inst_freq_hz) return attr.smoothed_inst_freq_hz;
  return attr.inst_freq_hz;
}

}  // namespace

std::vector<F0Candidate> find_fixed_points(const AttributeFrame& frame,
                                           const ChannelBank& bank) {
  if (frame.channels.size() != bank.size()) {
    throw std::invalid_argument("attribute frame does not match the bank");
  }
  std::vector<F0Candidate> found;
  const int per_octave = bank.spec().per_octave;
  for (std::size_t m = 0; m + 1 < bank.size(); ++m) {
    const auto f_a = channel_if(frame.channels[m]);
    const auto f_b = channel_if(frame.channels[m + 1]);
    if (!f_a || !f_b) continue;
    const double c_a = bank.center_hz(m);
    const double c_b = bank.center_hz(m + 1);
    const double d_a = *f_a - c_a;
    const double d_b = *f_b - c_b;
    if (!(d_a >= 0.0 && d_b < 0.0)) continue;

    double alpha = 0.0;
    if (*f_a > 0.0 && *f_b > 0.0) {
      // Zero of log2(IF / center), linear in the channel index.
      const double r_a = std::log2(*f_a / c_a);
      const double r_b = std::log2(*f_b / c_b);
      alpha = r_a / (r_a - r_b);
    } else {
      alpha = d_a / (d_a - d_b);
    }
    alpha = std::clamp(alpha, 0.0, std::nextafter(1.0, 0.0));

    F0Candidate cand;
    cand.freq_hz = c_a * std::exp2(alpha / per_octave);
    cand.lower_channel_index = static_cast<int>(m);
    cand.interpolation_fraction = alpha;
    const auto& s_a = frame.channels[m].snr_db;
    const auto& s_b = frame.channels[m + 1].snr_db;
    if (s_a && s_b) {
      cand.snr_db = *s_a + alpha * (*s_b - *s_a);
    } else if (s_a || s_b) {
      cand.snr_db = s_a ? *s_a : *s_b;
    } else {
      cand.snr_db = kSalienceFloorDb;
    }
    found.push_back(cand);
  }
  return found;
}

std::vector<F0Candidate> select_candidates(std::vector<F0Candidate> candidates,
                                           std::size_t max_count) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const F0Candidate& a, const F0Candidate& b) {
                     if (a.snr_db != b.snr_db) return a.snr_db > b.snr_db;
                     return a.freq_hz < b.freq_hz;
                   });
  if (candidates.size() > max_count) candidates.resize(max_count);
  return candidates;
}

std::optional<BestCandidate> best_candidate(std::span<const F0Candidate> selected,
                                            double salience_threshold_db) {
  if (selected.empty() || !(selected.front().snr_db >= salience_threshold_db)) {
    return std::nullopt;
  }
  return BestCandidate{selected.front(), note_reading(selected.front().freq_hz)};
}

double salience(std::span<const F0Candidate> selected) {
  return selected.empty() ? kSalienceFloorDb : selected.front().snr_db;
}

double midi_from_hz(double freq_hz) {
  if (!(freq_hz > 0.0)) throw std::invalid_argument("frequency must be positive");
  return 69.0 + 12.0 * std::log2(freq_hz / 440.0);
}

double hz_from_midi(double midi) {
  return 440.0 * std::exp2((midi - 69.0) / 12.0);
}

std::string note_name(int midi) {
  static constexpr std::array<const char*, 12> kNames = {
      "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
  const int pitch_class = ((midi % 12) + 12) % 12;
  const int octave = (midi - pitch_class) / 12 - 1;
  return std::string(kNames[static_cast<std::size_t>(pitch_class)]) + std::to_string(octave);
}

NoteReading note_reading(double freq_hz) {
  NoteReading r;
  r.midi_float = midi_from_hz(freq_hz);
  r.midi_nearest = static_cast<int>(std::floor(r.midi_float + 0.5));
  r.cents_offset = 100.0 * (r.midi_float - r.midi_nearest);
  r.note_name = note_name(r.midi_nearest);
  return r;
}

}  // namespace vocalscope
