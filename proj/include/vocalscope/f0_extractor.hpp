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

// f0 candidates as stable fixed points of the map from channel center
// frequency to output instantaneous frequency.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vocalscope/filterbank.hpp"
#include "vocalscope/phase_attributes.hpp"

namespace vocalscope {

inline constexpr std::size_t kMaxCandidates = 4;
inline constexpr double kSalienceFloorDb = -10.0;
inline constexpr double kDefaultSalienceThresholdDb = 15.0;

struct F0Candidate {
  double freq_hz = 0.0;
  double snr_db = kSalienceFloorDb;
  /// Channel just below the crossing.
  int lower_channel_index = 0;
  /// Position of the crossing between the two channels, in [0, 1).
  double interpolation_fraction = 0.0;
};

struct NoteReading {
  double midi_float = 0.0;
  int midi_nearest = 0;
  std::string note_name;
  /// In [-50, 50).
  double cents_offset = 0.0;
};

/// Uses the smoothed IF of each channel when present, else the one-sample
/// IF. A channel without a usable IF breaks any crossing through it.
std::vector<F0Candidate> find_fixed_points(const AttributeFrame& frame,
                                           const ChannelBank& bank);

/// Sorted by SNR descending (ties: lower frequency first), truncated.
std::vector<F0Candidate> select_candidates(std::vector<F0Candidate> candidates,
                                           std::size_t max_count = kMaxCandidates);

struct BestCandidate {
  F0Candidate candidate;
  NoteReading note;
};

/// The first of an already selected list, if its SNR reaches the threshold.
std::optional<BestCandidate> best_candidate(std::span<const F0Candidate> selected,
                                            double salience_threshold_db);

/// SNR of the first selected candidate, or the floor.
double salience(std::span<const F0Candidate> selected);

double midi_from_hz(double freq_hz);
double hz_from_midi(double midi);
/// "A4", "C#5", ...
std::string note_name(int midi);
NoteReading note_reading(double freq_hz);

}  // namespace vocalscope
