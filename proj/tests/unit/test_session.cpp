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

#include <random>

#include "livecap/session.hpp"
#include "livecap/tick.hpp"
#include "support.hpp"

namespace livecap {
namespace {

using testing::seg;

SessionState capturing_state() {
  SessionState s;
  s.capturing = true;
  return s;
}

TEST(Append, FinalIntoEmptyBuffer) {
  auto s = capturing_state();
  EXPECT_EQ(append_segment(s, seg(1, 0, 1000, "你好")), AppendResult::appended);
  EXPECT_EQ(s.buffer.size(), 1u);
}

TEST(Append, FinalReplacesProvisionalBySeq) {
  auto s = capturing_state();
  append_segment(s, seg(3, 0, 500, "甲"));
  append_segment(s, seg(7, 1000, 2000, "今天特", false));
  EXPECT_EQ(append_segment(s, seg(7, 1000, 2200, "今天特价")), AppendResult::revised);
  ASSERT_EQ(s.buffer.size(), 2u);
  EXPECT_EQ(s.buffer[1].text, "今天特价");
  EXPECT_TRUE(s.buffer[1].final);
  EXPECT_EQ(append_segment(s, seg(7, 1000, 2200, "改不了")), AppendResult::rejected);
  EXPECT_EQ(s.buffer[1].text, "今天特价");
}

TEST(Append, StaleGenerationCounted) {
  auto s = capturing_state();
  clear(s, 0);
  EXPECT_EQ(append_segment(s, seg(1, 0, 10, "旧", true, 0)), AppendResult::stale);
  EXPECT_TRUE(s.buffer.empty());
  EXPECT_EQ(s.stale_segments, 1u);
}

TEST(Append, RejectedWhileNotCapturing) {
  SessionState s;
  EXPECT_EQ(append_segment(s, seg(1, 0, 10, "x")), AppendResult::rejected);
  EXPECT_TRUE(s.buffer.empty());
}

TEST(Append, BufferStaysSortedByStart) {
  auto s = capturing_state();
  std::mt19937 rng(7);
  for (uint64_t i = 0; i < 200; ++i) {
    const int64_t t = std::uniform_int_distribution<int64_t>(0, 100000)(rng);
    append_segment(s, seg(i, t, t + 100, "x"));
  }
  for (std::size_t i = 1; i < s.buffer.size(); ++i) {
    EXPECT_LE(s.buffer[i - 1].t_start_ms, s.buffer[i].t_start_ms);
  }
}

TEST(Window, Examples) {
  auto s = capturing_state();
  append_segment(s, seg(1, 0, 10000, "甲"));
  append_segment(s, seg(2, 10000, 35000, "乙"));
  // CJK pieces join without a separator.
  EXPECT_EQ(window_text(s, 40000), "甲乙");
  EXPECT_EQ(window_text(s, 60000), "乙");
  EXPECT_EQ(window_text(capturing_state(), 40000), "");
}

TEST(Window, LatinPiecesJoinWithSpace) {
  auto s = capturing_state();
  append_segment(s, seg(1, 0, 10000, "price"));
  append_segment(s, seg(2, 10000, 35000, "is 9.9", false));
  EXPECT_EQ(window_text(s, 40000), "price is 9.9");
}

TEST(Tick, WindowsFollowTheStride) {
  auto s = capturing_state();
  append_segment(s, seg(1, 0, 300000, "持续"));
  EXPECT_FALSE(on_tick(s, 29999).has_value());
  auto t0 = on_tick(s, 30000);
  ASSERT_TRUE(t0);
  EXPECT_EQ(t0->tick_index, 0);
  EXPECT_EQ(t0->window_start_ms, 0);
  EXPECT_EQ(t0->window_end_ms, 30000);
  auto t1 = on_tick(s, 60000);
  ASSERT_TRUE(t1);
  EXPECT_EQ(t1->window_start_ms, 20000);
  EXPECT_EQ(t1->window_end_ms, 60000);
  int64_t prev_end = t1->window_end_ms;
  for (int64_t k = 2; k < 10; ++k) {
    auto t = on_tick(s, 30000 * (k + 1));
    ASSERT_TRUE(t);
    EXPECT_EQ(t->tick_index, k);
    EXPECT_EQ(t->window_end_ms - t->window_start_ms, 40000);
    EXPECT_EQ(prev_end - t->window_start_ms, 10000);
    prev_end = t->window_end_ms;
  }
}

TEST(Tick, WindowNeverExceedsSpan) {
  std::mt19937 rng(99);
  for (int i = 0; i < 500; ++i) {
    const int64_t origin = std::uniform_int_distribution<int64_t>(0, 1000000)(rng);
    const int64_t k = std::uniform_int_distribution<int64_t>(0, 50)(rng);
    const auto w = tick_window(origin, k);
    EXPECT_LE(w.end_ms - w.start_ms, 40000);
    EXPECT_GE(w.start_ms, origin);
    if (k >= 1) EXPECT_EQ(w.end_ms - w.start_ms, 40000);
  }
}

TEST(Tick, ClearRealignsTicks) {
  auto s = capturing_state();
  append_segment(s, seg(1, 0, 1000, "旧内容"));
  ASSERT_TRUE(on_tick(s, 30000));
  ASSERT_TRUE(on_tick(s, 60000));
  clear(s, 65000);
  EXPECT_EQ(s.generation, 1u);
  EXPECT_FALSE(on_tick(s, 90000).has_value());
  append_segment(s, seg(2, 66000, 70000, "新内容", true, 1));
  auto t = on_tick(s, 95000);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->tick_index, 0);
  EXPECT_EQ(t->window_start_ms, 65000);
  EXPECT_EQ(t->window_end_ms, 95000);
  EXPECT_EQ(t->window_text, "新内容");
  EXPECT_EQ(t->generation, 1u);
}

TEST(Clear, EmptiesAndBumps) {
  auto s = capturing_state();
  for (uint64_t i = 0; i < 5; ++i) append_segment(s, seg(i, static_cast<int64_t>(i) * 10, 100, "x"));
  clear(s, 0);
  EXPECT_EQ(s.generation, 1u);
  EXPECT_TRUE(s.buffer.empty());
  clear(s, 0);
  EXPECT_EQ(s.generation, 2u);
  EXPECT_TRUE(s.buffer.empty() && s.condensed_log.empty() && s.framework_snapshots.empty());
}

TEST(Modes, ParseAndPrint) {
  for (auto m : {DisplayMode::raw, DisplayMode::condensed, DisplayMode::framework}) {
    EXPECT_EQ(mode_from_string(to_string(m)), m);
  }
  EXPECT_FALSE(mode_from_string("rsvp").has_value());
}

SessionState populated(const std::string& started_at) {
  auto s = capturing_state();
  s.session_id = "demo";
  s.started_at = started_at;
  append_segment(s, seg(1, 0, 1000, "纯棉T恤"));
  append_segment(s, seg(2, 1000, 2000, "9.9元包邮"));
  summarize::CondensedUpdate u;
  u.tick_index = 0;
  u.text = "纯棉T恤9.9元包邮";
  u.emojis = {summarize::make_tag(summarize::EmojiMeaning::pricing)};
  u.window_end_ms = 30000;
  u.truncated = true;
  s.condensed_log.push_back(u);
  framework::FrameworkRecord r;
  r.get(framework::Field::product) = "纯棉T恤";
  r.get(framework::Field::price) = "9.9元";
  r.provenance = framework::TickRange{0, 0};
  s.framework_snapshots.push_back(r);
  return s;
}

TEST(History, RoundTrip) {
  testing::TempDir dir("hist");
  HistoryStore store(dir.path());
  auto s = populated("2026-10-16T09:15:02.123Z");
  const auto id = save_history(s, store);
  EXPECT_EQ(id, "2026-10-16T091502.123Z");
  EXPECT_EQ(id.find(':'), std::string::npos);
  const auto rec = store.load(id);
  EXPECT_EQ(rec, history_record(s));
  EXPECT_EQ(rec.segments.size(), 2u);
}

TEST(History, ListingOrderedByStart) {
  testing::TempDir dir("hist");
  HistoryStore store(dir.path());
  auto late = populated("2026-10-16T10:00:00.000Z");
  auto early = populated("2026-10-16T08:00:00.000Z");
  save_history(late, store);
  save_history(early, store);
  const auto list = store.list();
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].started_at, "2026-10-16T08:00:00.000Z");
  EXPECT_EQ(list[1].started_at, "2026-10-16T10:00:00.000Z");
  EXPECT_EQ(list[0].segments, 2u);
}

TEST(History, SaveClearSaveGivesTwoRecords) {
  testing::TempDir dir("hist");
  HistoryStore store(dir.path());
  auto s = populated("2026-10-16T08:00:00.000Z");
  const auto first = save_history(s, store);
  EXPECT_EQ(save_history(s, store), first);  // rewrites the same record
  clear(s, 5000);
  s.started_at = "2026-10-16T08:00:05.000Z";
  append_segment(s, seg(9, 6000, 7000, "新的", true, s.generation));
  const auto second = save_history(s, store);
  EXPECT_NE(first, second);
  ASSERT_EQ(store.list().size(), 2u);
  const auto rec = store.load(second);
  ASSERT_EQ(rec.segments.size(), 1u);
  EXPECT_EQ(rec.segments[0].text, "新的");
  EXPECT_TRUE(rec.condensed.empty());
  EXPECT_EQ(store.load(first).segments.size(), 2u);
}

TEST(History, SameStartTimeGetsDistinctIds) {
  testing::TempDir dir("hist");
  HistoryStore store(dir.path());
  auto a = populated("2026-10-16T08:00:00.000Z");
  auto b = populated("2026-10-16T08:00:00.000Z");
  EXPECT_NE(save_history(a, store), save_history(b, store));
}

TEST(History, BadIdsRejected) {
  testing::TempDir dir("hist");
  HistoryStore store(dir.path());
  EXPECT_THROW(store.load("../etc/passwd"), HistoryError);
  EXPECT_THROW(store.load("missing"), HistoryError);
}

TEST(History, AppearanceRoundTrip) {
  testing::TempDir dir("hist");
  HistoryStore store(dir.path());
  EXPECT_EQ(store.load_appearance(), nlohmann::json::object());
  store.save_appearance({{"background", "comic"}, {"opacity", 0.8}});
  EXPECT_EQ(store.load_appearance()["background"], "comic");
}

}  // namespace
}  // namespace livecap
