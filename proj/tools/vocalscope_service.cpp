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

// Streaming analysis service speaking the JSON frame protocol over WebSocket.

#include <atomic>
#include <cmath>
#include <csignal>
#include <limits>
#include <thread>
#include <cstdio>
#include <filesystem>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vocalscope/service.hpp"
#include "vocalscope/wav_io.hpp"
#include "vocalscope/ws_server.hpp"

using namespace vocalscope;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vocalscope-service: live f0 candidate frames over WebSocket"};
  std::string listen = "127.0.0.1:8765";
  std::string input = "tone:220";
  std::string config_path;
  std::string start = "monitoring";
  bool realtime = false;
  double hop_ms = 0.0;
  double salience_db = std::numeric_limits<double>::quiet_NaN();
  app.add_option("--listen", listen, "host:port (port 0 picks a free port)")->capture_default_str();
  app.add_option("--input", input, "WAV file, tone:<hz>[:<amp>] or silence")->capture_default_str();
  app.add_option("--config", config_path, "Session config file (key=value), created if missing");
  app.add_option("--start", start, "Initial mode: monitoring or stopped")->capture_default_str();
  app.add_flag("--realtime", realtime, "Pace the input at real time");
  app.add_option("--hop-ms", hop_ms, "Hop size in ms (overrides the config)");
  app.add_option("--salience-db", salience_db, "Salience threshold (overrides the config)");
  CLI11_PARSE(app, argc, argv);

  try {
    ServiceOptions options;
    if (!config_path.empty()) {
      options.config_path = config_path;
      if (std::filesystem::exists(config_path)) {
        options.session = read_session_config(config_path);
      } else {
        write_session_config(config_path, options.session);
      }
    }
    if (hop_ms > 0.0) options.session.hop_samples = hop_samples_from_ms(hop_ms, 44100.0);
    if (!std::isnan(salience_db)) options.session.salience_threshold_db = salience_db;
    options.analyzer.hop_samples = options.session.hop_samples;
    options.analyzer.salience_threshold_db = options.session.salience_threshold_db;
    options.start_mode = parse_mode(start);
    options.realtime = realtime;

    const auto [host, port] = parse_listen_address(listen);
    StreamService service(options, make_source(input, options.analyzer.bank.sample_rate_hz));
    WebSocketServer server(service, host, port);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.start();
    server.start();
    fmt::print("listening on {}:{}\n", server.address(), server.port());
    std::fflush(stdout);

    while (!service.stopping() && !g_interrupted) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    service.stop();
    // Let connections flush the final ack and close frames.
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    server.stop();
  } catch (const FormatError& e) {
    fmt::print(stderr, "format error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
