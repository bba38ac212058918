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

#include <doctest.h>

#include "support.hpp"
#include "vocalscope/protocol.hpp"

using namespace vocalscope;

TEST_SUITE("protocol") {

TEST_CASE("client messages parse") {
  const auto sub = std::get<SubscribeRequest>(
      parse_client_message(R"({"type":"subscribe","fps":30,"phase_maps":true,"queue":8})"));
  CHECK(sub.fps == 30.0);
  CHECK(sub.phase_maps);
  CHECK(sub.queue == 8);
  const auto defaults = std::get<SubscribeRequest>(parse_client_message(R"({"type":"subscribe"})"));
  CHECK(defaults.fps == 0.0);
  CHECK(defaults.queue == 256);

  const auto ctl = std::get<ControlRequest>(
      parse_client_message(R"({"type":"control","id":7,"command":"set.work","arg":"/tmp/x"})"));
  CHECK(ctl.id == "7");
  CHECK(ctl.command == "SET.WORK");
  CHECK(ctl.arg == "/tmp/x");
  const auto bare = std::get<ControlRequest>(parse_client_message(R"({"type":"control","command":"STOP"})"));
  CHECK(bare.arg.is_null());
  CHECK(bare.id.empty());
}

TEST_CASE("malformed client messages raise ProtocolError") {
  for (const char* text : {"", "{", "[]", R"({"fps":3})", R"({"type":5})", R"({"type":"dance"})",
                           R"({"type":"subscribe","fps":-1})", R"({"type":"subscribe","fps":"x"})",
                           R"({"type":"subscribe","queue":0})", R"({"type":"control"})",
                           R"({"type":"control","command":3})"}) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_client_message(text), ProtocolError);
  }
}

TEST_CASE("encoders round trip through the parser") {
  const SubscribeRequest s{12.5, true, 9};
  const auto back = std::get<SubscribeRequest>(parse_client_message(encode_subscribe(s).dump()));
  CHECK(back.fps == 12.5);
  CHECK(back.phase_maps);
  CHECK(back.queue == 9);
  const ControlRequest c{"a1", "CAL.LEVEL", 65};
  const auto cb = std::get<ControlRequest>(parse_client_message(encode_control(c).dump()));
  CHECK(cb.id == "a1");
  CHECK(cb.arg == 65);
}

TEST_CASE("rounding") {
  CHECK(round_to(1.26, 0.1) == doctest::Approx(1.3));
  CHECK(round_to(-0.00004, 1e-4) == 0.0);
  CHECK(round_to(12.345678, 0.01) == doctest::Approx(12.35));
}

TEST_CASE("a full frame stays compact and carries every field") {
  AnalyzerConfig config;
  config.phase_maps = true;
  const auto frames = analyze_signal(config, testing::vowel(220.0, 0.6));
  const auto& f = frames[frames.size() / 2];
  const auto j = encode_frame(f, 42, false);
  CHECK(j["type"] == "frame");
  CHECK(j["seq"] == 42);
  CHECK(j["sample_index"] == f.sample_index);
  CHECK(j["t_ms"] == f.t_ms);
  CHECK(j["spectrum"].size() == 176);
  CHECK(j["aligned_waveform"]["samples"].size() == kWireWaveformPoints);
  CHECK(j["aligned_waveform"]["length"] == f.waveform.samples.size());
  CHECK(j["candidates"].size() == f.candidates.size());
  CHECK(j["candidates"][0]["freq_hz"] == f.candidates[0].freq_hz);
  REQUIRE(f.best.has_value());
  CHECK(j["best"]["note_name"] == "A3");
  CHECK(j["level"].contains("dbfs_c_slow"));
  CHECK_FALSE(j.contains("phase_maps"));
  CHECK(j.dump().size() < 4096);

  const auto with_maps = encode_frame(f, 42, true);
  REQUIRE(with_maps.contains("phase_maps"));
  CHECK(with_maps["phase_maps"]["phase"].size() == 37);
  CHECK(with_maps["phase_maps"]["norm_gd"].size() == 37);

  AnalysisFrame empty;
  const auto e = encode_frame(empty, 0, true);
  CHECK(e["best"].is_null());
  CHECK(e["candidates"].empty());
  CHECK(e["aligned_waveform"]["samples"].empty());
}

}
