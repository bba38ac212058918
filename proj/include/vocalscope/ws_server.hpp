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

// WebSocket transport for StreamService. One io_context thread; each
// connection owns a Subscriber and drains it with sequential async writes.

#include <memory>
#include <string>
#include <thread>

#include "vocalscope/service.hpp"

namespace vocalscope {

class WebSocketServer {
 public:
  /// Binds immediately; port 0 picks a free port.
  WebSocketServer(StreamService& service, const std::string& address, unsigned short port);
  ~WebSocketServer();
  WebSocketServer(const WebSocketServer&) = delete;
  WebSocketServer& operator=(const WebSocketServer&) = delete;

  unsigned short port() const;
  std::string address() const;
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "host:port" -> parts. Throws std::invalid_argument.
std::pair<std::string, unsigned short> parse_listen_address(const std::string& text);

}  // namespace vocalscope
