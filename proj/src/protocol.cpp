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

#include "vocalscope/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vocalscope {
namespace {

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json optional_vector(const std::vector<std::optional<double>>& values, double step) {
  Json out = Json::array();
  for (const auto& v : values) out.push_back(v ? Json(round_to(*v, step)) : Json(nullptr));
  return out;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

}  // namespace

double round_to(double value, double step) {
  return std::round(value / step) * step;
}

ClientMessage parse_client_message(std::string_view text) {
  Json msg;
  try {
    msg = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    throw ProtocolError("message must be an object with a string 'type'");
  }
  const auto type = msg["type"].get<std::string>();
  try {
    if (type == "subscribe") {
      SubscribeRequest req;
      req.fps = msg.value("fps", 0.0);
      req.phase_maps = msg.value("phase_maps", false);
      req.queue = msg.value("queue", req.queue);
      if (req.fps < 0.0) throw ProtocolError("fps must not be negative");
      if (req.queue < 1) throw ProtocolError("queue must hold at least one frame");
      return req;
    }
    if (type == "control") {
      ControlRequest req;
      if (!msg.contains("command") || !msg["command"].is_string()) {
        throw ProtocolError("control needs a string 'command'");
      }
      req.command = upper(msg["command"].get<std::string>());
      if (msg.contains("id")) {
        req.id = msg["id"].is_string() ? msg["id"].get<std::string>() : msg["id"].dump();
      }
      if (msg.contains("arg")) req.arg = msg["arg"];
      return req;
    }
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("bad field: ") + e.what());
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

Json encode_candidate(const F0Candidate& c) {
  return {{"freq_hz", c.freq_hz}, {"snr_db", c.snr_db}};
}

Json encode_best(const std::optional<BestCandidate>& best) {
  if (!best) return nullptr;
  return {{"freq_hz", best->candidate.freq_hz},
          {"snr_db", best->candidate.snr_db},
          {"midi_float", best->note.midi_float},
          {"note_name", best->note.note_name},
          {"cents", best->note.cents_offset}};
}

Json encode_level(const LevelFrame& level) {
  return {{"dbfs_peak", round_to(level.dbfs_peak, 0.01)},
          {"dbfs_rms", round_to(level.dbfs_rms, 0.01)},
          {"dbfs_rms_smoothed", round_to(level.dbfs_rms_smoothed, 0.01)},
          {"dbfs_c_fast", round_to(level.dbfs_c_fast, 0.01)},
          {"dbfs_c_slow", round_to(level.dbfs_c_slow, 0.01)},
          {"spl_fast_db", optional_number(level.spl_fast_db)},
          {"spl_slow_db", optional_number(level.spl_slow_db)},
          {"calibrated", level.calibrated}};
}

Json encode_frame(const AnalysisFrame& frame, std::uint64_t seq, bool with_phase_maps) {
  Json candidates = Json::array();
  for (const auto& c : frame.candidates) candidates.push_back(encode_candidate(c));

  Json spectrum = Json::array();
  for (const double v : frame.spectrum_db) spectrum.push_back(round_to(v, 0.1));

  Json waveform = Json::array();
  for (const double v : decimate_waveform(frame.waveform.samples, kWireWaveformPoints)) {
    waveform.push_back(round_to(v, 1e-4));
  }

  Json out = {{"type", "frame"},
              {"seq", seq},
              {"t_ms", frame.t_ms},
              {"sample_index", frame.sample_index},
              {"warmup", frame.warmup},
              {"candidates", std::move(candidates)},
              {"best", encode_best(frame.best)},
              {"salience_db", frame.salience_db},
              {"level", encode_level(frame.level)},
              {"spectrum", std::move(spectrum)},
              {"aligned_waveform",
               {{"period_samples", frame.waveform.period_samples},
                {"start_sample", frame.waveform.start_sample},
                {"length", frame.waveform.samples.size()},
                {"samples", std::move(waveform)}}}};
  if (with_phase_maps && frame.phase_maps) {
    out["phase_maps"] = {{"phase", optional_vector(frame.phase_maps->phase, 1e-4)},
                         {"norm_if", optional_vector(frame.phase_maps->norm_inst_freq, 1e-4)},
                         {"norm_gd", optional_vector(frame.phase_maps->norm_group_delay, 1e-4)}};
  }
  return out;
}

Json encode_subscribe(const SubscribeRequest& r) {
  return {{"type", "subscribe"}, {"fps", r.fps}, {"phase_maps", r.phase_maps}, {"queue", r.queue}};
}

Json encode_control(const ControlRequest& r) {
  Json out = {{"type", "control"}, {"id", r.id}, {"command", r.command}};
  if (!r.arg.is_null()) out["arg"] = r.arg;
  return out;
}

}  // namespace vocalscope
