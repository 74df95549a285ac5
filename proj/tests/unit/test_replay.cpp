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

#include "livecap/replay.hpp"
#include "support.hpp"

namespace livecap {
namespace {

RunConfig demo_config() {
  RunConfig c;
  c.fixture = testing::data_path("demo_session.jsonl");
  return c;
}

std::vector<SessionEvent> decode_all(const ReplayResult& r) {
  std::vector<SessionEvent> out;
  for (const auto& l : r.lines) out.push_back(decode_event(l));
  return out;
}

TEST(Replay, DemoSessionProducesTenTicks) {
  const auto r = run_replay(demo_config());
  EXPECT_EQ(r.condensed, 10u);
  EXPECT_EQ(r.framework, 10u);
  const auto events = decode_all(r);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.front().kind, EventKind::state);
  EXPECT_EQ(events.front().payload["session_id"], "demo_session");
  int64_t tick = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    EXPECT_EQ(e.seq, i + 1);
    if (i > 0) EXPECT_GE(e.at_ms, events[i - 1].at_ms);
    if (e.kind != EventKind::condensed) continue;
    const int64_t end = (tick + 1) * kDefaultTickMs;
    EXPECT_EQ(e.payload["tick_index"], tick);
    EXPECT_EQ(e.payload["window"], nlohmann::json::array({std::max<int64_t>(0, end - kDefaultWindowMs), end}));
    EXPECT_EQ(e.at_ms, end);
    EXPECT_LE(summarize::measure(e.payload["text"].get<std::string>(), summarize::LengthUnit::graphemes), 50u);
    ++tick;
  }
}

TEST(Replay, Deterministic) {
  const auto a = run_replay(demo_config());
  const auto b = run_replay(demo_config());
  EXPECT_EQ(a.lines, b.lines);
}

TEST(Replay, CassetteReplayMatchesRecording) {
  testing::TempDir dir("cassette");
  auto rec = demo_config();
  rec.record_cassette = dir.str() + "/demo.jsonl";
  const auto recorded = run_replay(rec);
  auto replay = demo_config();
  replay.llm = "cassette:" + rec.record_cassette;
  EXPECT_EQ(run_replay(replay).lines, recorded.lines);
}

TEST(Replay, HistoryWrittenOnStop) {
  testing::TempDir dir("replay-history");
  auto c = demo_config();
  c.history_dir = dir.str();
  run_replay(c);
  HistoryStore store(dir.path());
  const auto list = store.list();
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0].session_id, "demo_session");
  EXPECT_EQ(list[0].condensed, 10u);
  EXPECT_EQ(list[0].started_at, "1970-01-01T00:00:00.000Z");
}

TEST(Replay, ShorterTickGivesMoreUpdates) {
  auto c = demo_config();
  c.tick_ms = 10000;
  c.window_ms = 10000;
  const auto r = run_replay(c);
  EXPECT_EQ(r.condensed, 30u);
}

TEST(Replay, ConfigValidation) {
  RunConfig c;
  EXPECT_THROW(validate(c), ConfigError);
  c = demo_config();
  c.tick_ms = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = demo_config();
  c.llm = "gpt";
  EXPECT_THROW(validate(c), ConfigError);
  c = demo_config();
  c.audio = c.fixture;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_NO_THROW(validate(demo_config()));
}

}  // namespace
}  // namespace livecap
