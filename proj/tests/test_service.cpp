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
#include "vocalscope/service.hpp"
#include "vocalscope/ws_server.hpp"
#include "ws_client.hpp"

using namespace vocalscope;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

std::shared_ptr<const std::string> text(const std::string& s) {
  return std::make_shared<const std::string>(s);
}

ServiceOptions quiet_options(Mode start = Mode::monitoring) {
  ServiceOptions o;
  o.start_mode = start;
  o.analyzer.spectrum = false;
  return o;
}

// Every message until end of stream.
std::vector<json> collect(Subscriber& sub, std::chrono::milliseconds limit = 20s) {
  std::vector<json> out;
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    auto m = sub.pop(200ms);
    if (!m) continue;
    out.push_back(json::parse(**m));
    if (out.back()["type"] == "eos") break;
  }
  return out;
}

std::vector<json> of_type(const std::vector<json>& msgs, const std::string& type) {
  std::vector<json> out;
  for (const auto& m : msgs) {
    if (m["type"] == type) out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("sources") {
  ToneSource tone(441.0, 0.5, 44100.0, 0.01);
  std::vector<double> buf(300);
  CHECK(tone.read(buf) == 300);
  CHECK(buf[0] == 0.5);
  CHECK(buf[100] == doctest::Approx(0.5));
  CHECK(buf[50] == doctest::Approx(-0.5));
  CHECK(tone.read(buf) == 141);
  CHECK(tone.read(buf) == 0);
  SilenceSource quiet(44100.0);
  CHECK(quiet.read(buf) == 300);
  CHECK(buf[7] == 0.0);
  CHECK(make_source("tone:220", 44100.0)->describe().find("220") != std::string::npos);
  CHECK(make_source("silence", 44100.0)->describe() == "silence");
  CHECK_THROWS(make_source("/no/such/file.wav", 44100.0));
  CHECK_THROWS(make_source("tone:abc", 44100.0));
}

TEST_CASE("full queues drop the oldest frames but keep control messages") {
  Subscriber s(1, SubscribeRequest{0.0, false, 3});
  s.subscribe(SubscribeRequest{0.0, false, 3});
  s.push_control(text("c1"));
  for (int i = 1; i <= 5; ++i) s.push_frame(text(fmt::format("f{}", i)));
  s.push_control(text("c2"));
  std::vector<std::string> got;
  while (auto m = s.try_pop()) got.push_back(**m);
  CHECK(got == std::vector<std::string>{"c1", "f3", "f4", "f5", "c2"});
  CHECK(s.dropped_frames() == 2);
  s.close();
  s.push_control(text("late"));
  CHECK_FALSE(s.try_pop().has_value());
  CHECK(s.closed());
}

TEST_CASE("subscribers see only their share of frames") {
  StreamService service(quiet_options(), std::make_unique<ToneSource>(220.0, 0.3, 44100.0, 1.0));
  CHECK(service.frame_rate_hz() == doctest::Approx(44100.0 / 220.0));
  auto all = service.connect();
  auto fifty = service.connect();
  auto idle = service.connect();
  all->subscribe({0.0, false, 100000});
  fifty->subscribe({50.0, false, 100000});
  service.start();
  const auto a = collect(*all);
  const auto b = collect(*fifty);
  service.stop();

  CHECK(a.front()["type"] == "hello");
  const auto fa = of_type(a, "frame");
  const auto fb = of_type(b, "frame");
  REQUIRE(of_type(a, "eos").size() == 1);
  CHECK(of_type(a, "eos")[0]["frames"] == fa.size());
  CHECK(fa.size() == service.frames_published());
  CHECK(fa.size() == (44100 + 219) / 220);
  REQUIRE(!fb.empty());
  for (const auto& f : fb) CHECK(f["seq"].get<std::uint64_t>() % 4 == 0);
  CHECK(fb.size() == (fa.size() + 3) / 4);
  for (std::size_t i = 0; i < fa.size(); ++i) CHECK(fa[i]["seq"] == i);
  // Services force phase maps on; subscribers choose whether to receive them.
  CHECK_FALSE(fa[100].contains("phase_maps"));

  std::vector<std::string> idle_types;
  while (auto m = idle->try_pop()) idle_types.push_back(json::parse(**m)["type"]);
  CHECK(std::count(idle_types.begin(), idle_types.end(), "frame") == 0);
  CHECK(std::count(idle_types.begin(), idle_types.end(), "eos") == 1);
}

TEST_CASE("hello describes the stream") {
  StreamService service(quiet_options(Mode::stopped), std::make_unique<SilenceSource>(44100.0));
  const auto h = service.hello();
  CHECK(h["type"] == "hello");
  CHECK(h["schema"] == kSchemaVersion);
  CHECK(h["sample_rate_hz"] == 44100.0);
  CHECK(h["hop_samples"] == 220);
  CHECK(h["envelope"] == "six_term");
  CHECK(h["c_mag"] == 1.05);
  CHECK(h["bank"]["centers_hz"].size() == 37);
  CHECK(h["spectrum"]["bands"] == 176);
  CHECK(h["waveform_points"] == kWireWaveformPoints);
  CHECK(h["commands"].size() == 11);
  CHECK(h["state"]["mode"] == "stopped");
}

TEST_CASE("commands are acknowledged and state is broadcast") {
  StreamService service(quiet_options(Mode::stopped), std::make_unique<ToneSource>(330.0, 0.3, 44100.0, 0.5));
  auto sub = service.connect();
  auto other = service.connect();
  sub->subscribe({0.0, false, 100000});
  service.start();
  std::this_thread::sleep_for(100ms);
  CHECK(service.frames_published() == 0);

  service.submit({"x1", "PLAY.REF", nullptr}, sub);
  service.submit({"x2", "REC.START", nullptr}, sub);
  const auto msgs = collect(*sub);
  service.stop();
  const auto acks = of_type(msgs, "ack");
  REQUIRE(acks.size() == 2);
  CHECK(acks[0]["id"] == "x1");
  CHECK(acks[0]["ok"] == false);
  CHECK(acks[0]["error"].get<std::string>().rfind("rejected in state stopped", 0) == 0);
  CHECK(acks[1]["id"] == "x2");
  CHECK(acks[1]["ok"] == true);
  CHECK(acks[1]["state"]["mode"] == "monitoring");
  CHECK(of_type(msgs, "state").size() == 1);
  const auto frames = of_type(msgs, "frame");
  CHECK(frames.size() == (22050 + 219) / 220);
  CHECK(frames.front()["t_ms"] == 0.0);

  std::vector<json> seen;
  while (auto m = other->try_pop()) seen.push_back(json::parse(**m));
  CHECK(of_type(seen, "ack").empty());
  CHECK(of_type(seen, "state").size() == 1);
}

TEST_CASE("QUIT marks the service as stopping") {
  StreamService service(quiet_options(), std::make_unique<SilenceSource>(44100.0));
  auto sub = service.connect();
  service.start();
  service.submit({"q", "QUIT", nullptr}, sub);
  for (int i = 0; i < 100 && !service.stopping(); ++i) std::this_thread::sleep_for(20ms);
  CHECK(service.stopping());
  service.stop();
}

TEST_CASE("mismatched source rate is refused") {
  CHECK_THROWS_AS(StreamService(quiet_options(), std::make_unique<SilenceSource>(48000.0)),
                  std::invalid_argument);
}

TEST_CASE("listen addresses") {
  CHECK(parse_listen_address("127.0.0.1:8765") == std::pair<std::string, unsigned short>{"127.0.0.1", 8765});
  CHECK(parse_listen_address("localhost:0").second == 0);
  CHECK_THROWS(parse_listen_address("nonsense"));
  CHECK_THROWS(parse_listen_address("host:99999"));
}

TEST_CASE("WebSocket round trip") {
  StreamService service(quiet_options(Mode::stopped), std::make_unique<ToneSource>(220.0, 0.3, 44100.0, 0.5));
  WebSocketServer server(service, "127.0.0.1", 0);
  server.start();
  service.start();
  REQUIRE(server.port() != 0);

  testing::WsClient client("127.0.0.1", server.port());
  const auto hello = client.receive();
  CHECK(hello["type"] == "hello");

  client.send({{"type", "subscribe"}, {"fps", 0}, {"phase_maps", true}, {"queue", 100000}});
  const auto sub_ack = client.receive_until("ack");
  CHECK(sub_ack["command"] == "subscribe");
  CHECK(sub_ack["ok"] == true);

  client.send({{"type", "control"}, {"id", "r"}, {"command", "rec.start"}});
  const auto ack = client.receive_until("ack");
  CHECK(ack["id"] == "r");
  CHECK(ack["command"] == "REC.START");
  CHECK(ack["ok"] == true);

  std::size_t frames = 0;
  bool maps = true;
  const auto eos = client.receive_until("eos", [&](const json& m) {
    if (m["type"] == "frame") {
      ++frames;
      maps = maps && m.contains("phase_maps");
    }
  });
  CHECK(frames == eos["frames"]);
  CHECK(frames == (22050 + 219) / 220);
  CHECK(maps);

  client.send(json("not an object"));
  const auto err = client.receive_until("error");
  CHECK(err["message"].get<std::string>().find("type") != std::string::npos);

  server.stop();
  // Stopping drops open connections.
  CHECK_THROWS(client.raw_receive());
  service.stop();
}

}
