// Copyright 2026 The livecap Authors
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

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "livecap/engine.hpp"
#include "livecap/protocol.hpp"

namespace livecap {

namespace gateway_detail {
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

/// `?resume=N` on the upgrade request target.
inline std::optional<uint64_t> resume_from_target(std::string_view target) {
  const auto q = target.find('?');
  if (q == std::string_view::npos) return std::nullopt;
  auto query = target.substr(q + 1);
  while (!query.empty()) {
    const auto amp = query.find('&');
    const auto pair = query.substr(0, amp);
    if (pair.substr(0, 7) == "resume=") {
      const auto digits = pair.substr(7);
      if (digits.empty() || digits.size() > 19) return std::nullopt;
      uint64_t v = 0;
      for (char c : digits) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + static_cast<uint64_t>(c - '0');
      }
      return v;
    }
    if (amp == std::string_view::npos) break;
    query.remove_prefix(amp + 1);
  }
  return std::nullopt;
}

/// One client. Reads commands, writes the subscription's events in order.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Engine& engine) : ws_(std::move(socket)), engine_(engine) {}

  void start() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->read_request(); });
  }

  void shutdown() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->sub_) self->sub_->close();
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
      beast::get_lowest_layer(self->ws_).close();
    });
  }

 private:
  void read_request() {
    http::async_read(beast::get_lowest_layer(ws_), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return;
                       self->accept();
                     });
  }

  void accept() {
    if (!websocket::is_upgrade(request_)) {
      beast::get_lowest_layer(ws_).close();
      return;
    }
    resume_ = resume_from_target(std::string_view(request_.target().data(), request_.target().size()));
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->on_open();
    });
  }

  void on_open() {
    sub_ = engine_.subscribe(resume_);
    std::weak_ptr<Connection> weak = shared_from_this();
    auto exec = ws_.get_executor();
    sub_->set_notify([weak, exec] {
      if (auto self = weak.lock()) net::post(exec, [self] { self->pump(); });
    });
    pump();
    read_next();
  }

  void pump() {
    if (writing_ || finished_ || !sub_) return;
    auto e = sub_->try_pop();
    if (!e) {
      if (sub_->closed()) finish();
      return;
    }
    out_ = encode_event(*e);
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->drop();
        return;
      }
      self->pump();
    });
  }

  void read_next() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->drop();
        return;
      }
      self->on_message();
    });
  }

  void on_message() {
    if (violated_) return;
    if (!ws_.got_text()) {
      in_.consume(in_.size());
      return violation("binary frames are not part of the protocol");
    }
    const auto text = beast::buffers_to_string(in_.data());
    in_.consume(in_.size());
    SessionCommand cmd;
    try {
      cmd = decode_command(text);
    } catch (const ProtocolError& e) {
      return violation(e.what());
    }
    engine_.handle_command(cmd);
    read_next();
  }

  // Final error event through this connection's own queue (so it gets the
  // next seq), then close once it has been written.
  void violation(const std::string& message) {
    violated_ = true;
    sub_->push(engine_.connection_error("protocol_violation", message));
    sub_->close();
    pump();
  }

  void finish() {
    finished_ = true;
    const auto code = sub_->overflowed() ? websocket::close_code::policy_error
                      : violated_        ? websocket::close_code::protocol_error
                                         : websocket::close_code::normal;
    ws_.async_close(code, [self = shared_from_this()](beast::error_code) {});
  }

  void drop() {
    if (sub_) sub_->close();
    finished_ = true;
  }

  websocket::stream<beast::tcp_stream> ws_;
  Engine& engine_;
  beast::flat_buffer buffer_;
  beast::flat_buffer in_;
  http::request<http::string_body> request_;
  std::optional<uint64_t> resume_;
  std::shared_ptr<Subscription> sub_;
  std::string out_;
  bool writing_ = false;
  bool finished_ = false;
  bool violated_ = false;
};

}  // namespace gateway_detail

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// WebSocket front end for one engine. Binding happens in the constructor,
/// so a busy port fails fast. Port 0 picks a free one.
class Gateway {
 public:
  Gateway(Engine& engine, const std::string& address, uint16_t port)
      : engine_(engine), acceptor_(boost::asio::make_strand(ioc_)) {
    namespace net = boost::asio;
    boost::system::error_code ec;
    const auto addr = net::ip::make_address(address, ec);
    if (ec) throw GatewayError("invalid bind address '" + address + "': " + ec.message());
    const gateway_detail::tcp::endpoint ep(addr, port);
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw GatewayError("cannot listen on " + address + ":" + std::to_string(port) + ": " + ec.message());
  }

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;
  ~Gateway() { stop(); }

  uint16_t port() const { return acceptor_.local_endpoint().port(); }

  /// Serves on a background thread.
  void start() {
    if (thread_.joinable()) return;
    accept_next();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  void stop() {
    if (!thread_.joinable()) return;
    boost::asio::post(acceptor_.get_executor(), [this] {
      boost::system::error_code ec;
      acceptor_.close(ec);
      std::lock_guard lock(mu_);
      for (auto& w : connections_) {
        if (auto c = w.lock()) c->shutdown();
      }
    });
    // Give in-flight closes a moment, then stop the loop.
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    ioc_.stop();
    thread_.join();
  }

 private:
  void accept_next() {
    acceptor_.async_accept(boost::asio::make_strand(ioc_),
                           [this](boost::system::error_code ec, gateway_detail::tcp::socket socket) {
                             if (ec) return;
                             auto conn = std::make_shared<gateway_detail::Connection>(std::move(socket), engine_);
                             {
                               std::lock_guard lock(mu_);
                               std::erase_if(connections_, [](const auto& w) { return w.expired(); });
                               connections_.push_back(conn);
                             }
                             conn->start();
                             accept_next();
                           });
  }

  Engine& engine_;
  boost::asio::io_context ioc_{1};
  gateway_detail::tcp::acceptor acceptor_;
  std::thread thread_;
  std::mutex mu_;
  std::vector<std::weak_ptr<gateway_detail::Connection>> connections_;
};

}  // namespace livecap
