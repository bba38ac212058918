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

// JSON wire messages exchanged with display clients. Every message is one
// WebSocket text frame carrying an object with a "type" field.
//
//   service -> client: hello, frame, ack, state, eos
//   client -> service: subscribe, control

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "vocalscope/analyzer.hpp"

namespace vocalscope {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kWireWaveformPoints = 128;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SubscribeRequest {
  /// Requested frame rate; 0 means every frame.
  double fps = 0.0;
  bool phase_maps = false;
  /// Bounded queue length for frames (acks are never dropped).
  std::size_t queue = 256;
};

struct ControlRequest {
  std::string id;
  /// Upper-cased, e.g. "SAVE.WORK".
  std::string command;
  Json arg;
};

using ClientMessage = std::variant<SubscribeRequest, ControlRequest>;

/// Throws ProtocolError for malformed JSON, unknown types or bad fields.
ClientMessage parse_client_message(std::string_view text);

Json encode_candidate(const F0Candidate& candidate);
Json encode_best(const std::optional<BestCandidate>& best);
Json encode_level(const LevelFrame& level);
/// Spectrum rounded to 0.1 dB and the waveform resampled to 128 points at
/// 1e-4; candidates and best at full precision.
Json encode_frame(const AnalysisFrame& frame, std::uint64_t seq, bool with_phase_maps);

Json encode_subscribe(const SubscribeRequest& request);
Json encode_control(const ControlRequest& request);

/// Round to a multiple of step.
double round_to(double value, double step);

}  // namespace vocalscope
