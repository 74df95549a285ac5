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

#include <fstream>
#include <random>
#include <sstream>

#include "livecap/framework.hpp"
#include "livecap/summarize.hpp"
#include "support.hpp"

namespace livecap::summarize {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TickRequest request(std::string text, int64_t tick = 0) {
  TickRequest r;
  r.tick_index = tick;
  r.generation = 3;
  r.window_start_ms = 0;
  r.window_end_ms = 30000;
  r.window_text = std::move(text);
  return r;
}

class CannedProvider final : public LlmProvider {
 public:
  explicit CannedProvider(std::string reply) : reply_(std::move(reply)) {}
  std::string complete(const Dialogue&, int64_t) override { return reply_; }

 private:
  std::string reply_;
};

class FailingProvider final : public LlmProvider {
 public:
  std::string complete(const Dialogue&, int64_t) override { throw ProviderError("deadline exceeded", true); }
};

TEST(Prompts, MatchShippedTemplates) {
  EXPECT_EQ(condense_prompt(PromptLanguage::zh), read_file(testing::data_path("prompts/condense.zh.txt")));
  EXPECT_EQ(condense_prompt(PromptLanguage::en), read_file(testing::data_path("prompts/condense.en.txt")));
  EXPECT_EQ(emoji_prompt(PromptLanguage::zh), read_file(testing::data_path("prompts/emoji.zh.txt")));
  EXPECT_EQ(emoji_prompt(PromptLanguage::en), read_file(testing::data_path("prompts/emoji.en.txt")));
  EXPECT_EQ(framework_prompt(PromptLanguage::zh), read_file(testing::data_path("prompts/framework.zh.txt")));
  EXPECT_EQ(framework_prompt(PromptLanguage::en), read_file(testing::data_path("prompts/framework.en.txt")));
}

TEST(Prompts, CondenseShape) {
  const std::string in[] = {"今天特价"};
  const auto d = render_prompt(PromptKind::condense, in);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].role, Role::system);
  EXPECT_EQ(d[0].text, condense_prompt(PromptLanguage::zh));
  EXPECT_EQ(d[1].role, Role::user);
  EXPECT_EQ(d[1].text, "今天特价");
  EXPECT_EQ(render_prompt(PromptKind::condense, in), d);
}

TEST(Prompts, EmojiShape) {
  const std::string in[] = {"今天特价", "特价"};
  const auto d = render_prompt(PromptKind::emoji, in, PromptLanguage::en);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d[2].role, Role::model);
  EXPECT_EQ(d[2].text, "特价");
  EXPECT_EQ(d[3].role, Role::user);
  EXPECT_EQ(d[3].text, emoji_prompt(PromptLanguage::en));
  EXPECT_EQ(dialogue_kind(d), PromptKind::emoji);
}

TEST(Prompts, FrameworkShapeAndBounds) {
  const std::vector<std::string> three = {"一", "二", "三"};
  const auto d = render_prompt(PromptKind::framework, three);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].text, framework_prompt(PromptLanguage::zh));
  EXPECT_EQ(d[1].text, "一\n二\n三");
  EXPECT_THROW(render_prompt(PromptKind::framework, std::vector<std::string>{}), std::invalid_argument);
  EXPECT_THROW(render_prompt(PromptKind::framework, std::vector<std::string>(11, "x")), std::invalid_argument);
  EXPECT_NO_THROW(render_prompt(PromptKind::framework, std::vector<std::string>(10, "x")));
}

TEST(Condense, MockExtractsNumbersAndKeywords) {
  MockLlmProvider mock;
  const auto out = condense(mock, request("原价59元 现价9.9元 包邮"));
  EXPECT_NE(out.update.text.find("9.9"), std::string::npos);
  EXPECT_NE(out.update.text.find("包邮"), std::string::npos);
  EXPECT_LE(measure(out.update.text, LengthUnit::graphemes), 50u);
  EXPECT_FALSE(out.update.degraded);
  EXPECT_EQ(out.update.generation, 3u);
  EXPECT_EQ(out.dialogue.size(), 3u);
}

TEST(Condense, ExtractiveRuleKeepsInformativeClausesInOrder) {
  EXPECT_EQ(extractive_condense("大家好，欢迎来到直播间，原价59元，现在只要9.9元，包邮，喜欢的扣1。", 50,
                                LengthUnit::graphemes),
            "原价59元，现在只要9.9元，包邮，喜欢的扣1");
  EXPECT_EQ(extractive_condense("Hello everyone. The price is 9.9 CNY. Free shipping today.", 50, LengthUnit::words),
            "The price is 9.9 CNY, Free shipping today");
  // Nothing informative: the leading clauses stand in.
  EXPECT_EQ(extractive_condense("大家好，欢迎", 50, LengthUnit::graphemes), "大家好，欢迎");
}

TEST(Condense, LongReplyTruncated) {
  std::string reply;
  for (int i = 0; i < 80; ++i) reply += "好";
  CannedProvider p(reply);
  const auto out = condense(p, request("今天特价"));
  EXPECT_TRUE(out.update.truncated);
  EXPECT_EQ(measure(out.update.text, LengthUnit::graphemes), 50u);
}

TEST(Condense, WordLimitForLatinWindows) {
  std::string reply;
  for (int i = 0; i < 80; ++i) reply += "word" + std::to_string(i) + " ";
  CannedProvider p(reply);
  const auto out = condense(p, request("the price is only 9.9 today"));
  EXPECT_EQ(out.update.unit, LengthUnit::words);
  EXPECT_TRUE(out.update.truncated);
  EXPECT_EQ(measure(out.update.text, LengthUnit::words), 50u);
  EXPECT_EQ(out.update.text.substr(out.update.text.size() - 6), "word49");
}

TEST(Condense, EmptyReplyDegrades) {
  CannedProvider p("   \n ");
  const auto out = condense(p, request("原价59元，现价9.9元"));
  EXPECT_TRUE(out.update.degraded);
  EXPECT_EQ(out.update.text, "原价59元，现价9.9元");
  EXPECT_TRUE(out.dialogue.empty());
}

TEST(Condense, ProviderFailureDegrades) {
  FailingProvider p;
  const auto out = condense(p, request("包邮"));
  EXPECT_TRUE(out.update.degraded);
  EXPECT_EQ(out.update.text, "包邮");
  EXPECT_TRUE(select_emojis(p, {}).empty());
}

TEST(Condense, AdversarialRepliesRespectTheBound) {
  std::mt19937 rng(11);
  for (int i = 0; i < 300; ++i) {
    const std::size_t limit = 1 + rng() % 60;
    const auto reply = testing::random_mixed_text(rng, rng() % (limit * 10 + 1));
    CannedProvider p(reply);
    CondenseConfig cfg;
    cfg.limit = limit;
    const auto req = request(i % 2 ? "价格9.9元包邮" : "the price is 9.9 with free shipping");
    const auto out = condense(p, req, cfg);
    const auto& u = out.update;
    EXPECT_LE(measure(u.text, u.unit), limit) << reply;
    if (!u.degraded) {
      EXPECT_EQ(u.truncated, measure(utf8::trim(reply), u.unit) > limit);
    }
  }
}

TEST(Emoji, ScanExamples) {
  const auto tags = scan_emojis("💰 🏷️ 主播在介绍价格");
  ASSERT_EQ(tags.size(), 2u);
  EXPECT_EQ(tags[0].meaning, EmojiMeaning::pricing);
  EXPECT_EQ(tags[1].meaning, EmojiMeaning::coupon);
  EXPECT_TRUE(scan_emojis("没有相关表情").empty());
  const auto claps = scan_emojis("👏👏👏");
  ASSERT_EQ(claps.size(), 1u);
  EXPECT_EQ(claps[0].meaning, EmojiMeaning::gratitude);
  EXPECT_EQ(scan_emojis("⭐")[0].meaning, EmojiMeaning::rating);
  EXPECT_EQ(scan_emojis("⌚")[0].meaning, EmojiMeaning::urgency);
  EXPECT_EQ(scan_emojis("🏷")[0].meaning, EmojiMeaning::coupon);
}

TEST(Emoji, VocabularyIsClosed) {
  EXPECT_EQ(kEmojiTable.size(), 15u);
  std::mt19937 rng(3);
  for (int i = 0; i < 200; ++i) {
    for (const auto& t : scan_emojis(testing::random_mixed_text(rng, 30))) {
      EXPECT_EQ(t.symbol, emoji_entry(t.meaning).symbol);
    }
  }
}

TEST(Emoji, MockFollowUpTurn) {
  MockLlmProvider mock;
  const auto out = condense(mock, request("今天限时秒杀，原价59元，现价9.9元"));
  const auto tags = select_emojis(mock, out.dialogue);
  ASSERT_FALSE(tags.empty());
  EXPECT_EQ(tags[0].meaning, EmojiMeaning::flash_event);
  EXPECT_NE(std::find_if(tags.begin(), tags.end(), [](const EmojiTag& t) { return t.meaning == EmojiMeaning::pricing; }),
            tags.end());
}

TEST(Framework, MockReplyCarriesProductAndPrice) {
  MockLlmProvider mock;
  const std::vector<std::string> items = {"今天给大家带来纯棉T恤", "原价59元，现价9.9元，包邮"};
  const auto text = summarize_framework(mock, items);
  EXPECT_NE(text.find("商品: 纯棉T恤"), std::string::npos) << text;
  EXPECT_NE(text.find("价格: 9.9"), std::string::npos) << text;
  const auto report = framework::parse_framework(text);
  EXPECT_EQ(report.record.get(framework::Field::free_shipping), "是");
  EXPECT_EQ(report.record.get(framework::Field::category), "服装");
}

TEST(Framework, SlidingWindowOfTen) {
  std::vector<CondensedUpdate> log;
  for (int i = 1; i <= 11; ++i) {
    CondensedUpdate u;
    u.tick_index = i - 1;
    u.text = "item" + std::to_string(i);
    log.push_back(u);
  }
  const auto items = framework_items(log);
  ASSERT_EQ(items.size(), 10u);
  EXPECT_EQ(items.front(), "item2");
  EXPECT_EQ(items.back(), "item11");
  EXPECT_TRUE(framework_items(std::span<const CondensedUpdate>{}).empty());
}

TEST(Cassette, ReplaysByDialogueKey) {
  const std::string in[] = {"今天特价"};
  const auto d = render_prompt(PromptKind::condense, in);
  CassetteLlmProvider cassette;
  cassette.put(d, {"特价", std::nullopt, 0});
  EXPECT_EQ(cassette.complete(d, 1000), "特价");
  const std::string other[] = {"别的"};
  EXPECT_THROW(cassette.complete(render_prompt(PromptKind::condense, other), 1000), ProviderError);
  cassette.put(d, {"", std::string("boom"), 0});
  EXPECT_THROW(cassette.complete(d, 1000), ProviderError);
  cassette.put(d, {"slow", std::nullopt, 50});
  try {
    cassette.complete(d, 5);
    ADD_FAILURE() << "deadline not enforced";
  } catch (const ProviderError& e) {
    EXPECT_TRUE(e.timeout());
  }
}

TEST(Cassette, RecordThenReplay) {
  testing::TempDir dir("cassette");
  const auto path = (dir.path() / "c.jsonl").string();
  MockLlmProvider mock;
  RecordingLlmProvider rec(mock);
  const auto a = condense(rec, request("原价59元 现价9.9元 包邮"));
  const auto tags = select_emojis(rec, a.dialogue);
  rec.save(path);
  auto replay = CassetteLlmProvider::load(path);
  const auto b = condense(replay, request("原价59元 现价9.9元 包邮"));
  EXPECT_EQ(b.update, a.update);
  EXPECT_EQ(select_emojis(replay, b.dialogue), tags);
}

TEST(Cassette, BadFileNamesTheLine) {
  testing::TempDir dir("cassette");
  const auto path = (dir.path() / "bad.jsonl").string();
  std::ofstream(path) << "{\"key\":\"a\",\"response\":\"x\"}\n{not json\n";
  try {
    CassetteLlmProvider::load(path);
    ADD_FAILURE();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(KeywordTable, ShippedFileMatchesDefault) {
  const auto file = nlohmann::json::parse(read_file(testing::data_path("keyword_table.json")));
  const auto t = keyword_table_from_json(file);
  const auto& d = default_keyword_table();
  EXPECT_EQ(t.sales_keywords, d.sales_keywords);
  EXPECT_EQ(t.currency_markers, d.currency_markers);
  EXPECT_EQ(t.products.size(), d.products.size());
  EXPECT_EQ(t.emoji_rules.size(), d.emoji_rules.size());
  EXPECT_EQ(t.field_keywords, d.field_keywords);
}

}  // namespace
}  // namespace livecap::summarize
