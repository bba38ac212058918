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

#include "vocalscope/ws_server.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <fmt/format.h>

namespace vocalscope {
namespace {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, StreamService& service)
      : ws_(std::move(socket)), service_(service) {}

  void run() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->accept(); });
  }

  /// Drops the TCP connection without a closing handshake.
  void shutdown() {
    done_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void accept() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    subscriber_ = service_.connect();
    std::weak_ptr<Connection> weak = shared_from_this();
    subscriber_->set_notify([weak, executor = ws_.get_executor()] {
      net::post(executor, [weak] {
        if (auto self = weak.lock()) self->pump();
      });
    });
    pump();
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      finish();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      const auto message = parse_client_message(text);
      if (const auto* sub = std::get_if<SubscribeRequest>(&message)) {
        subscriber_->subscribe(*sub);
        nlohmann::json ack = {{"type", "ack"}, {"command", "subscribe"}, {"ok", true},
                              {"result", encode_subscribe(*sub)}};
        subscriber_->push_control(std::make_shared<const std::string>(ack.dump()));
      } else {
        service_.submit(std::get<ControlRequest>(message), subscriber_);
      }
    } catch (const ProtocolError& e) {
      nlohmann::json error = {{"type", "error"}, {"message", e.what()}};
      subscriber_->push_control(std::make_shared<const std::string>(error.dump()));
    }
    read();
  }

  void pump() {
    if (writing_ || done_ || !subscriber_) return;
    auto next = subscriber_->try_pop();
    if (!next) {
      if (subscriber_->closed()) close();
      return;
    }
    writing_ = true;
    current_ = std::move(*next);
    ws_.text(true);
    ws_.async_write(net::buffer(*current_),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->writing_ = false;
                      self->current_.reset();
                      if (ec) {
                        self->finish();
                        return;
                      }
                      self->pump();
                    });
  }

  void close() {
    if (done_) return;
    done_ = true;
    ws_.async_close(websocket::close_code::going_away,
                    [self = shared_from_this()](beast::error_code) { self->finish(); });
  }

  void finish() {
    done_ = true;
    if (subscriber_) {
      subscriber_->set_notify({});
      service_.disconnect(subscriber_->id());
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  StreamService& service_;
  beast::flat_buffer buffer_;
  std::shared_ptr<Subscriber> subscriber_;
  std::shared_ptr<const std::string> current_;
  bool writing_ = false;
  bool done_ = false;
};

}  // namespace

struct WebSocketServer::Impl {
  StreamService& service;
  net::io_context ioc{1};
  tcp::acceptor acceptor{net::make_strand(ioc)};
  std::thread thread;
  std::vector<std::weak_ptr<Connection>> connections;

  explicit Impl(StreamService& s) : service(s) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto connection = std::make_shared<Connection>(std::move(socket), service);
      std::erase_if(connections, [](const auto& c) { return c.expired(); });
      connections.push_back(connection);
      connection->run();
      do_accept();
    });
  }
};

WebSocketServer::WebSocketServer(StreamService& service, const std::string& address,
                                 unsigned short port)
    : impl_(std::make_unique<Impl>(service)) {
  const tcp::endpoint endpoint(net::ip::make_address(address), port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen(net::socket_base::max_listen_connections);
}

WebSocketServer::~WebSocketServer() { stop(); }

unsigned short WebSocketServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::string WebSocketServer::address() const {
  return impl_->acceptor.local_endpoint().address().to_string();
}

void WebSocketServer::start() {
  if (impl_->thread.joinable()) return;
  impl_->do_accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void WebSocketServer::stop() {
  if (!impl_) return;
  if (impl_->thread.joinable()) {
    net::post(impl_->ioc, [impl = impl_.get()] {
      beast::error_code ec;
      impl->acceptor.close(ec);
      for (auto& weak : impl->connections) {
        if (auto c = weak.lock()) c->shutdown();
      }
      impl->ioc.stop();
    });
  } else {
    impl_->ioc.stop();
  }
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::pair<std::string, unsigned short> parse_listen_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::invalid_argument(fmt::format("listen address '{}' is not host:port", text));
  }
  int port = 0;
  try {
    port = std::stoi(text.substr(colon + 1));
  } catch (const std::logic_error&) {
    throw std::invalid_argument(fmt::format("bad port in '{}'", text));
  }
  if (port < 0 || port > 65535) throw std::invalid_argument(fmt::format("bad port in '{}'", text));
  return {text.substr(0, colon), static_cast<unsigned short>(port)};
}

}  // namespace vocalscope
