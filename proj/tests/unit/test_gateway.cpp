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


#include <gtest/gtest.h>

#include <sys/socket.h>
#include <sys/time.h>

#include <fstream>

#include "livecap/gateway.hpp"
#include "livecap/serve.hpp"
#include "support.hpp"

namespace livecap {
namespace {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class Client {
 public:
  explicit Client(uint16_t port, const std::string& target = "/") : ws_(ioc_) {
    tcp::endpoint ep(net::ip::make_address("127.0.0.1"), port);
    ws_.next_layer().connect(ep);
    timeval tv{5, 0};
    ::setsockopt(ws_.next_layer().native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ws_.handshake("127.0.0.1", target);
  }

  SessionEvent next() {
    beast::flat_buffer b;
    ws_.read(b);
    return decode_event(beast::buffers_to_string(b.data()));
  }

  void send(const std::string& text) {
    ws_.text(true);
    ws_.write(net::buffer(text));
  }

  void command(const nlohmann::json& id, const std::string& kind, nlohmann::json args = nlohmann::json::object()) {
    send(nlohmann::json{{"v", 1}, {"id", id}, {"kind", kind}, {"args", args}}.dump());
  }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

struct GatewayFixture {
  VirtualClock clock{0, false};
  summarize::MockLlmProvider mock;
  Engine engine{EngineConfig{}, clock, mock};
  Gateway gateway{engine, "127.0.0.1", 0};
  GatewayFixture() { gateway.start(); }
};

TEST(Gateway, ResumeTargetParsing) {
  using gateway_detail::resume_from_target;
  EXPECT_EQ(resume_from_target("/?resume=12"), 12u);
  EXPECT_EQ(resume_from_target("/?a=1&resume=3"), 3u);
  EXPECT_FALSE(resume_from_target("/"));
  EXPECT_FALSE(resume_from_target("/?resume="));
  EXPECT_FALSE(resume_from_target("/?resume=1x"));
}

TEST(Gateway, IdleConnectYieldsSnapshotThenAck) {
  GatewayFixture f;
  Client c(f.gateway.port());
  const auto snap = c.next();
  EXPECT_EQ(snap.kind, EventKind::state);
  EXPECT_EQ(snap.seq, 1u);
  c.command("m1", "set_mode", {{"mode", "raw"}});
  const auto ack = c.next();
  EXPECT_EQ(ack.seq, 2u);
  EXPECT_EQ(ack.kind, EventKind::state);
  EXPECT_EQ(ack.payload["command_id"], "m1");
  EXPECT_EQ(ack.payload["mode"], "raw");
}

TEST(Gateway, ClientsSeeIdenticalSequences) {
  GatewayFixture f;
  Client a(f.gateway.port());
  Client b(f.gateway.port());
  EXPECT_EQ(a.next(), b.next());
  a.command(1, "start_capture");
  const auto started = a.next();
  EXPECT_EQ(started.payload["command_id"], 1);
  EXPECT_EQ(b.next(), started);
  for (uint64_t k = 0; k < 6; ++k) {
    const auto t = static_cast<int64_t>(k) * 5000;
    f.engine.ingest_segment(testing::seg(k, t, t + 4000, "纯棉T恤9.9元，"));
  }
  f.clock.advance_to(30000);
  f.engine.advance();
  b.command("b", "pause_rsvp");
  auto until_ack = [](Client& c) {
    std::vector<SessionEvent> out;
    do {
      out.push_back(c.next());
    } while (out.back().payload.value("command_id", nlohmann::json()) != "b");
    return out;
  };
  const auto ea = until_ack(a);
  const auto eb = until_ack(b);
  EXPECT_EQ(ea, eb);
  EXPECT_GE(ea.size(), 9u);
}

TEST(Gateway, ResumeAfterReconnect) {
  GatewayFixture f;
  std::vector<SessionEvent> seen;
  uint64_t cursor = 0;
  {
    Client c(f.gateway.port());
    cursor = c.next().payload["cursor"].get<uint64_t>();
    c.command("x", "start_capture");
    seen.push_back(c.next());
  }
  f.engine.ingest_segment(testing::seg(0, 0, 1000, "新品"));
  f.engine.ingest_segment(testing::seg(1, 1000, 2000, "上架"));
  Client again(f.gateway.port(), "/?resume=" + std::to_string(cursor + seen.size()));
  const auto snap = again.next();
  EXPECT_EQ(snap.payload["resumed"], true);
  const auto s0 = again.next();
  const auto s1 = again.next();
  EXPECT_EQ(s0.payload["text"], "新品");
  EXPECT_EQ(s1.payload["text"], "上架");
  EXPECT_EQ(s1.seq, 3u);
}

TEST(Gateway, ProtocolViolationClosesWithFinalError) {
  GatewayFixture f;
  Client c(f.gateway.port());
  c.next();
  c.send("{not json");
  const auto err = c.next();
  EXPECT_EQ(err.kind, EventKind::error);
  EXPECT_EQ(err.seq, 2u);
  EXPECT_EQ(err.payload["code"], "protocol_violation");
  EXPECT_THROW(c.next(), boost::system::system_error);
  // The engine and other clients are unaffected.
  Client d(f.gateway.port());
  EXPECT_EQ(d.next().kind, EventKind::state);
}

TEST(Gateway, UnknownCommandIsAnErrorNotAViolation) {
  GatewayFixture f;
  Client c(f.gateway.port());
  c.next();
  c.command("z", "fly");
  const auto err = c.next();
  EXPECT_EQ(err.payload["code"], "unknown_command");
  EXPECT_EQ(err.payload["command_id"], "z");
  c.command("y", "set_mode", {{"mode", "condensed"}});
  EXPECT_EQ(c.next().payload["command_id"], "y");
}

TEST(Gateway, PortInUse) {
  GatewayFixture f;
  EXPECT_THROW(Gateway(f.engine, "127.0.0.1", f.gateway.port()), GatewayError);
  EXPECT_THROW(Gateway(f.engine, "not-an-address", 0), GatewayError);
}

TEST(Gateway, ServeRuntimeSavesHistory) {
  testing::TempDir dir("serve");
  const auto fixture = dir.str() + "/short.jsonl";
  {
    std::ofstream out(fixture);
    out << R"({"seq": 1, "t_start_ms": 0, "t_end_ms": 100, "text": "欢迎", "final": true})" << "\n"
        << R"({"seq": 2, "t_start_ms": 100, "t_end_ms": 200, "text": "纯棉T恤9.9元", "final": true})" << "\n";
  }
  ServeConfig cfg;
  cfg.run.fixture = fixture;
  cfg.run.history_dir = dir.str() + "/history";
  cfg.port = 0;
  ServeRuntime runtime(cfg);
  runtime.start();
  Client c(runtime.port());
  c.next();
  c.command("s", "start_capture");
  EXPECT_EQ(c.next().payload["command_id"], "s");
  EXPECT_EQ(c.next().payload["text"], "欢迎");
  EXPECT_EQ(c.next().payload["text"], "纯棉T恤9.9元");
  c.command("t", "stop_capture");
  const auto saved = c.next();
  EXPECT_EQ(saved.kind, EventKind::history);
  EXPECT_EQ(saved.payload["action"], "saved");
  EXPECT_EQ(c.next().payload["command_id"], "t");
  runtime.shutdown();
  const auto list = runtime.store().list();
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0].segments, 2u);
}

}  // namespace
}  // namespace livecap
