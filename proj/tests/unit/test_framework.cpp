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
#include "support.hpp"

namespace livecap::framework {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FrameworkRecord golden_record() {
  FrameworkRecord r;
  r.get(Field::product) = "Pure Cotton T-Shirt";
  r.get(Field::category) = "Clothing";
  r.get(Field::promotional_policy) = "Original price 59 CNY, now 9.9 CNY";
  r.get(Field::free_shipping) = "Yes";
  r.get(Field::seven_day_return) = "Yes";
  r.get(Field::price) = "9.9 CNY";
  r.get(Field::after_sales) = "Full refund or exchange available";
  r.get(Field::product_description) = "High-quality pure cotton T-shirt, like a dozens CNY one";
  r.get(Field::user_experience) = "Comfortable, breathable, and durable fabric for everyday wear";
  r.get(Field::user_manual) = "Wash in cold water, do not bleach, and air dry for best results";
  return r;
}

TEST(Parse, GoldenText) {
  const auto report = parse_framework(read_file(testing::fixture_path("framework/golden_framework.txt")));
  EXPECT_EQ(report.record, golden_record());
  EXPECT_TRUE(report.warnings.empty());
}

TEST(Parse, SingleField) {
  const auto report = parse_framework("Product: X");
  EXPECT_EQ(report.record.get(Field::product), "X");
  EXPECT_EQ(std::count_if(report.record.fields.begin(), report.record.fields.end(),
                          [](const auto& v) { return !v.has_value(); }),
            9);
  EXPECT_EQ(report.count(ParseWarning::Kind::missing_field), 9u);
  EXPECT_EQ(report.warnings.size(), 9u);
}

TEST(Parse, FencedOutput) {
  const auto plain = parse_framework("Product: X");
  const auto fenced = parse_framework("```\nProduct: X\n```");
  EXPECT_EQ(fenced.record, plain.record);
  EXPECT_EQ(fenced.count(ParseWarning::Kind::stripped_fence), 1u);
  EXPECT_EQ(fenced.count(ParseWarning::Kind::missing_field), 9u);
  EXPECT_EQ(fenced.count(ParseWarning::Kind::unknown_line), 0u);
}

TEST(Parse, FencedChineseCorpus) {
  const auto report = parse_framework(read_file(testing::fixture_path("framework/fenced_zh.txt")));
  EXPECT_EQ(report.record.get(Field::product), "纯棉T恤");
  EXPECT_EQ(report.record.get(Field::category), "服装");
  EXPECT_EQ(report.count(ParseWarning::Kind::stripped_fence), 1u);
  EXPECT_EQ(report.warnings.front().line, 1u);
  EXPECT_EQ(report.count(ParseWarning::Kind::missing_field), 8u);
}

TEST(Parse, ReorderedCorpus) {
  const auto report = parse_framework(read_file(testing::fixture_path("framework/reordered.txt")));
  EXPECT_EQ(report.record.get(Field::price), "9.9 CNY");
  EXPECT_EQ(report.record.get(Field::product), "Pure Cotton T-Shirt");
  EXPECT_EQ(report.record.get(Field::free_shipping), "Yes");
  ASSERT_EQ(report.count(ParseWarning::Kind::reordered_field), 1u);
  ASSERT_EQ(report.count(ParseWarning::Kind::unknown_line), 1u);
  EXPECT_EQ(report.count(ParseWarning::Kind::missing_field), 7u);
  for (const auto& w : report.warnings) {
    if (w.kind == ParseWarning::Kind::reordered_field) {
      EXPECT_EQ(w.line, 2u);
      EXPECT_EQ(w.field, Field::product);
    }
    if (w.kind == ParseWarning::Kind::unknown_line) EXPECT_EQ(w.line, 3u);
    if (w.kind == ParseWarning::Kind::missing_field) EXPECT_EQ(w.line, 0u);
  }
}

TEST(Parse, ChineseLabelsAndNullTokens) {
  const auto report = parse_framework(
      "- **商品**：纯棉T恤\n类别: 服装\n促销政策：null\n是否包邮：是\n7 天无理由退货：是\n价格：9.9元\n"
      "售后服务：无\n产品介绍：纯棉\n使用体验：舒适\n使用说明书：冷水洗");
  EXPECT_EQ(report.record.get(Field::product), "纯棉T恤");
  EXPECT_FALSE(report.record.get(Field::promotional_policy).has_value());
  EXPECT_EQ(report.record.get(Field::after_sales), "无");
  EXPECT_EQ(report.record.get(Field::user_manual), "冷水洗");
  EXPECT_TRUE(report.warnings.empty());
}

TEST(Parse, NothingRecognizedThrows) {
  EXPECT_THROW(parse_framework(""), ParseError);
  EXPECT_THROW(parse_framework("I cannot help with that."), ParseError);
}

std::string random_value(std::mt19937& rng) {
  while (true) {
    auto v = std::string(utf8::trim(testing::random_mixed_text(rng, 1 + rng() % 12)));
    for (auto& c : v) {
      if (c == '\t') c = ' ';
    }
    if (v.empty() || detail::is_null_token(v) || v.substr(0, 2) == "**") continue;
    return v;
  }
}

FrameworkRecord random_record(std::mt19937& rng, bool allow_empty = false) {
  FrameworkRecord r;
  do {
    for (auto& f : r.fields) {
      if (rng() % 3 == 0) {
        f.reset();
      } else {
        f = random_value(rng);
      }
    }
  } while (!allow_empty && r.empty());
  return r;
}

TEST(Render, ParseRenderRoundTrip) {
  std::mt19937 rng(2024);
  for (int i = 0; i < 600; ++i) {
    FrameworkRecord r = random_record(rng);
    const auto text = render(r);
    const auto report = parse_framework(text);
    ASSERT_EQ(report.record, r) << text;
    EXPECT_EQ(report.count(ParseWarning::Kind::unknown_line), 0u);
    EXPECT_EQ(report.count(ParseWarning::Kind::reordered_field), 0u);
    EXPECT_EQ(render(report.record), text);
  }
}

TEST(Render, CanonicalShape) {
  const auto text = render(golden_record());
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
  EXPECT_EQ(text.substr(0, 29), "Product: Pure Cotton T-Shirt\n");
  EXPECT_NE(text.find("7-Day No Reason Return: Yes\n"), std::string::npos);
  EXPECT_NE(render(FrameworkRecord{}).find("Price: null\n"), std::string::npos);
}

TEST(Json, RoundTrip) {
  std::mt19937 rng(5);
  for (int i = 0; i < 100; ++i) {
    auto r = random_record(rng, true);
    if (i % 2) r.provenance = TickRange{i, i + 3};
    EXPECT_EQ(record_from_json(to_json(r)), r);
  }
}

TEST(Merge, Examples) {
  FrameworkRecord a, b;
  a.get(Field::product) = "纯棉T恤";
  a.get(Field::price) = "59元";
  a.provenance = TickRange{0, 3};
  b.get(Field::price) = "9.9元";
  b.provenance = TickRange{1, 4};
  const auto m = merge(a, b);
  EXPECT_EQ(m.get(Field::product), "纯棉T恤");
  EXPECT_EQ(m.get(Field::price), "9.9元");
  EXPECT_EQ(m.provenance, (TickRange{0, 4}));
}

TEST(Merge, IdentityAndAssociativity) {
  std::mt19937 rng(77);
  auto with_range = [&](FrameworkRecord r) {
    if (rng() % 2) {
      const int64_t a = rng() % 10;
      r.provenance = TickRange{a, a + static_cast<int64_t>(rng() % 10)};
    }
    return r;
  };
  for (int i = 0; i < 300; ++i) {
    const auto a = with_range(random_record(rng, true));
    const auto b = with_range(random_record(rng, true));
    const auto c = with_range(random_record(rng, true));
    EXPECT_EQ(merge(a, FrameworkRecord{}), a);
    EXPECT_EQ(merge(FrameworkRecord{}, a), a);
    EXPECT_EQ(merge(merge(a, b), c), merge(a, merge(b, c)));
  }
}

TEST(Classify, FourReferenceCases) {
  EXPECT_EQ(classify_discrepancy("9.9 CNY", "5.9 CNY"), DiscrepancyReason::incorrect_information);

  AnnotationContext confused;
  confused.other_products = {"several dozen yuan T-shirt"};
  EXPECT_EQ(classify_discrepancy("Pure Cotton T-Shirt", "A several dozen yuan T-shirt", confused),
            DiscrepancyReason::confused_information);

  EXPECT_EQ(classify_discrepancy(std::nullopt, "Wireless Bluetooth Earbuds"),
            DiscrepancyReason::fabricated_information);

  AnnotationContext sub;
  sub.subcategories = {"Red-color Pure Cotton T-shirt"};
  EXPECT_EQ(classify_discrepancy("Pure Cotton T-Shirt", "Red-color Pure Cotton T-shirt", sub),
            DiscrepancyReason::interpret_out_of_context);
}

TEST(Classify, MissingAndMatches) {
  EXPECT_EQ(classify_discrepancy("9.9 CNY", std::nullopt), DiscrepancyReason::missing_information);
  EXPECT_EQ(classify_discrepancy(std::nullopt, std::nullopt), std::nullopt);
  EXPECT_EQ(classify_discrepancy("Pure Cotton T-Shirt", "pure  cotton t-shirt"), std::nullopt);
  AnnotationContext para;
  para.accepted_paraphrases = {"9.9元"};
  EXPECT_EQ(classify_discrepancy("9.9 CNY", "9.9元", para), std::nullopt);
}

TEST(Classify, Reflexive) {
  std::mt19937 rng(31);
  for (int i = 0; i < 300; ++i) {
    const auto v = random_value(rng);
    AnnotationContext ctx;
    ctx.other_products = {random_value(rng)};
    ctx.subcategories = {random_value(rng)};
    EXPECT_EQ(classify_discrepancy(v, v, ctx), std::nullopt) << v;
  }
}

TEST(Labels, EveryAliasRoundTrips) {
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    EXPECT_EQ(detail::match_label(kCanonicalLabels[i]), kAllFields[i]);
    EXPECT_EQ(detail::match_label(kChineseLabels[i]), kAllFields[i]);
    EXPECT_EQ(field_from_id(kFieldIds[i]), kAllFields[i]);
  }
}

}  // namespace
}  // namespace livecap::framework
