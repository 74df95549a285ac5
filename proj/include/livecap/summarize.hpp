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

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "livecap/prompts.hpp"
#include "livecap/tick.hpp"
#include "livecap/utf8.hpp"

namespace livecap::summarize {

enum class PromptLanguage { zh, en };

inline std::string_view to_string(PromptLanguage l) { return l == PromptLanguage::zh ? "zh" : "en"; }

inline PromptLanguage language_from_string(std::string_view s) {
  if (s == "zh") return PromptLanguage::zh;
  if (s == "en") return PromptLanguage::en;
  throw std::invalid_argument("unknown prompt language: " + std::string(s));
}

enum class Role { system, user, model };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::model: return "model";
  }
  return "user";
}

struct PromptMessage {
  Role role;
  std::string text;
  bool operator==(const PromptMessage&) const = default;
};

using Dialogue = std::vector<PromptMessage>;

enum class PromptKind { condense, emoji, framework };

inline constexpr std::size_t kMaxFrameworkItems = 10;

inline std::string_view condense_prompt(PromptLanguage l) {
  return l == PromptLanguage::zh ? prompts::kCondenseZh : prompts::kCondenseEn;
}
inline std::string_view emoji_prompt(PromptLanguage l) {
  return l == PromptLanguage::zh ? prompts::kEmojiZh : prompts::kEmojiEn;
}
inline std::string_view framework_prompt(PromptLanguage l) {
  return l == PromptLanguage::zh ? prompts::kFrameworkZh : prompts::kFrameworkEn;
}

/// Builds a dialogue from its template. Inputs per kind:
///   condense:  {window_text}
///   emoji:     {window_text, condense_response}; yields the four-turn
///               follow-up ending in the emoji instruction
///   framework: 1..10 condensed texts in ascending tick order, sent as one
///               newline-joined user turn
inline Dialogue render_prompt(PromptKind kind, std::span<const std::string> inputs,
                              PromptLanguage lang = PromptLanguage::zh) {
  switch (kind) {
    case PromptKind::condense:
      if (inputs.size() != 1) throw std::invalid_argument("condense prompt takes one window text");
      return {{Role::system, std::string(condense_prompt(lang))}, {Role::user, inputs[0]}};
    case PromptKind::emoji:
      if (inputs.size() != 2) {
        throw std::invalid_argument("emoji prompt takes the window text and the condense response");
      }
      return {{Role::system, std::string(condense_prompt(lang))},
              {Role::user, inputs[0]},
              {Role::model, inputs[1]},
              {Role::user, std::string(emoji_prompt(lang))}};
    case PromptKind::framework: {
      if (inputs.empty() || inputs.size() > kMaxFrameworkItems) {
        throw std::invalid_argument("framework prompt takes 1 to 10 condensed items");
      }
      std::string joined;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (i) joined.push_back('\n');
        joined += inputs[i];
      }
      return {{Role::system, std::string(framework_prompt(lang))}, {Role::user, std::move(joined)}};
    }
  }
  throw std::invalid_argument("unknown prompt kind");
}

/// Identifies which of the three interactions a dialogue is.
inline std::optional<PromptKind> dialogue_kind(const Dialogue& d) {
  if (d.empty() || d.front().role != Role::system) return std::nullopt;
  const auto& sys = d.front().text;
  if (sys == framework_prompt(PromptLanguage::zh) || sys == framework_prompt(PromptLanguage::en)) {
    return PromptKind::framework;
  }
  if (sys == condense_prompt(PromptLanguage::zh) || sys == condense_prompt(PromptLanguage::en)) {
    if (d.size() == 4 && d.back().role == Role::user &&
        (d.back().text == emoji_prompt(PromptLanguage::zh) ||
         d.back().text == emoji_prompt(PromptLanguage::en))) {
      return PromptKind::emoji;
    }
    if (d.size() == 2) return PromptKind::condense;
  }
  return std::nullopt;
}

inline PromptLanguage dialogue_language(const Dialogue& d) {
  if (!d.empty() && (d.front().text == prompts::kCondenseEn || d.front().text == prompts::kFrameworkEn)) {
    return PromptLanguage::en;
  }
  return PromptLanguage::zh;
}

/// Stable 64-bit FNV-1a over role/text pairs, hex encoded.
inline std::string dialogue_key(const Dialogue& d) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xFF;
    h *= 0x100000001b3ULL;
  };
  for (const auto& m : d) {
    mix(to_string(m.role));
    mix(m.text);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Length limits
// ---------------------------------------------------------------------------

enum class LengthUnit { graphemes, words };

inline std::string_view to_string(LengthUnit u) { return u == LengthUnit::graphemes ? "graphemes" : "words"; }

inline LengthUnit unit_for(std::string_view text) {
  return utf8::is_cjk_dominant(text) ? LengthUnit::graphemes : LengthUnit::words;
}

/// Graphemes are counted excluding whitespace.
inline std::size_t measure(std::string_view text, LengthUnit unit) {
  if (unit == LengthUnit::words) return utf8::words(text).size();
  std::size_t n = 0;
  for (auto g : utf8::graphemes(text)) {
    if (!utf8::all_space(g)) ++n;
  }
  return n;
}

struct Enforced {
  std::string text;
  bool truncated = false;
};

/// Cuts at the last grapheme or word boundary that keeps the measure within
/// `limit`, preserving the original separators.
inline Enforced enforce_limit(std::string_view text, std::size_t limit, LengthUnit unit) {
  const auto trimmed = utf8::trim(text);
  if (measure(trimmed, unit) <= limit) return {std::string(trimmed), false};
  std::size_t cut = 0;
  if (unit == LengthUnit::words) {
    const auto ws = utf8::words(trimmed);
    if (limit > 0) cut = static_cast<std::size_t>(ws[limit - 1].data() + ws[limit - 1].size() - trimmed.data());
  } else {
    std::size_t n = 0;
    for (auto g : utf8::graphemes(trimmed)) {
      if (utf8::all_space(g)) continue;
      if (n == limit) break;
      ++n;
      cut = static_cast<std::size_t>(g.data() + g.size() - trimmed.data());
    }
  }
  return {std::string(utf8::trim(trimmed.substr(0, cut))), true};
}

// ---------------------------------------------------------------------------
// Emoji vocabulary
// ---------------------------------------------------------------------------

enum class EmojiMeaning {
  recommend,
  not_recommend,
  rating,
  flash_event,
  urgency,
  highlight,
  detail_demo,
  new_product_intro,
  newly_launched,
  pricing,
  promotion,
  coupon,
  discounted_price,
  ending,
  gratitude,
};

inline constexpr std::size_t kEmojiMeaningCount = 15;

struct EmojiEntry {
  EmojiMeaning meaning;
  std::string_view id;
  std::string_view symbol;
};

// Meaning -> glyph, following the English table (which reuses 🕒, 👉 and
// 🏷️ across meanings).
inline constexpr std::array<EmojiEntry, kEmojiMeaningCount> kEmojiTable = {{
    {EmojiMeaning::recommend, "recommend", "👉"},
    {EmojiMeaning::not_recommend, "not_recommend", "👎"},
    {EmojiMeaning::rating, "rating", "★"},
    {EmojiMeaning::flash_event, "flash_event", "🕒"},
    {EmojiMeaning::urgency, "urgency", "🕒"},
    {EmojiMeaning::highlight, "highlight", "🌟"},
    {EmojiMeaning::detail_demo, "detail_demo", "🔍"},
    {EmojiMeaning::new_product_intro, "new_product_intro", "📺"},
    {EmojiMeaning::newly_launched, "newly_launched", "🆕"},
    {EmojiMeaning::pricing, "pricing", "💰"},
    {EmojiMeaning::promotion, "promotion", "👉"},
    {EmojiMeaning::coupon, "coupon", "🏷️"},
    {EmojiMeaning::discounted_price, "discounted_price", "🏷️"},
    {EmojiMeaning::ending, "ending", "👋"},
    {EmojiMeaning::gratitude, "gratitude", "🙏"},
}};

struct EmojiTag {
  EmojiMeaning meaning;
  std::string symbol;
  bool operator==(const EmojiTag&) const = default;
};

inline const EmojiEntry& emoji_entry(EmojiMeaning m) { return kEmojiTable[static_cast<std::size_t>(m)]; }

inline EmojiTag make_tag(EmojiMeaning m) { return {m, std::string(emoji_entry(m).symbol)}; }

inline std::optional<EmojiMeaning> emoji_meaning_from_id(std::string_view id) {
  for (const auto& e : kEmojiTable) {
    if (e.id == id) return e.meaning;
  }
  return std::nullopt;
}

namespace detail {

struct GlyphMeaning {
  std::u32string_view glyph;  // variation selectors stripped
  EmojiMeaning meaning;
};

// A glyph shared by several meanings resolves to the first one in table
// order. ⌚ and 👏 come from the Chinese table, ⭐ is accepted for ★.
inline constexpr GlyphMeaning kGlyphs[] = {
    {U"\U0001F449", EmojiMeaning::recommend},
    {U"\U0001F44E", EmojiMeaning::not_recommend},
    {U"★", EmojiMeaning::rating},
    {U"⭐", EmojiMeaning::rating},
    {U"\U0001F552", EmojiMeaning::flash_event},
    {U"⌚", EmojiMeaning::urgency},
    {U"\U0001F31F", EmojiMeaning::highlight},
    {U"\U0001F50D", EmojiMeaning::detail_demo},
    {U"\U0001F4FA", EmojiMeaning::new_product_intro},
    {U"\U0001F195", EmojiMeaning::newly_launched},
    {U"\U0001F4B0", EmojiMeaning::pricing},
    {U"\U0001F3F7", EmojiMeaning::coupon},
    {U"\U0001F44B", EmojiMeaning::ending},
    {U"\U0001F64F", EmojiMeaning::gratitude},
    {U"\U0001F44F", EmojiMeaning::gratitude},
};

}  // namespace detail

/// Scans free text for vocabulary glyphs; meanings in first-occurrence
/// order, each at most once. Unknown glyphs are ignored.
inline std::vector<EmojiTag> scan_emojis(std::string_view text) {
  std::vector<EmojiTag> out;
  std::array<bool, kEmojiMeaningCount> seen{};
  for (auto g : utf8::graphemes(text)) {
    std::u32string base;
    for (char32_t cp : utf8::to_u32(g)) {
      if (cp != 0xFE0F && cp != 0xFE0E) base.push_back(cp);
    }
    for (const auto& gm : detail::kGlyphs) {
      if (base == gm.glyph) {
        const auto idx = static_cast<std::size_t>(gm.meaning);
        if (!seen[idx]) {
          seen[idx] = true;
          out.push_back(make_tag(gm.meaning));
        }
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Keyword table (drives the deterministic mock and the degraded fallback)
// ---------------------------------------------------------------------------

struct ProductEntry {
  std::string name;
  std::string category;
};

struct EmojiRule {
  std::string symbol;
  std::vector<std::string> keywords;
};

struct KeywordTable {
  std::vector<std::string> sales_keywords;
  std::vector<std::string> currency_markers;
  std::vector<std::string> original_price_markers;
  std::vector<std::string> price_markers;
  std::vector<ProductEntry> products;
  std::vector<EmojiRule> emoji_rules;
  std::vector<std::string> shipping_yes, shipping_no;
  std::vector<std::string> return_yes, return_no;
  /// Keyed by framework field id (promotional_policy, after_sales, ...).
  std::map<std::string, std::vector<std::string>> field_keywords;
};

inline KeywordTable keyword_table_from_json(const nlohmann::json& j) {
  KeywordTable t;
  auto strings = [&](const char* key) {
    return j.contains(key) ? j.at(key).get<std::vector<std::string>>() : std::vector<std::string>{};
  };
  t.sales_keywords = strings("sales_keywords");
  t.currency_markers = strings("currency_markers");
  t.original_price_markers = strings("original_price_markers");
  t.price_markers = strings("price_markers");
  if (j.contains("products")) {
    for (const auto& p : j.at("products")) {
      t.products.push_back({p.at("name").get<std::string>(), p.value("category", std::string())});
    }
  }
  if (j.contains("emoji_rules")) {
    for (const auto& r : j.at("emoji_rules")) {
      t.emoji_rules.push_back({r.at("symbol").get<std::string>(),
                               r.at("keywords").get<std::vector<std::string>>()});
    }
  }
  if (j.contains("free_shipping")) {
    t.shipping_yes = j["free_shipping"].value("yes", std::vector<std::string>{});
    t.shipping_no = j["free_shipping"].value("no", std::vector<std::string>{});
  }
  if (j.contains("seven_day_return")) {
    t.return_yes = j["seven_day_return"].value("yes", std::vector<std::string>{});
    t.return_no = j["seven_day_return"].value("no", std::vector<std::string>{});
  }
  if (j.contains("fields")) {
    for (const auto& [k, v] : j.at("fields").items()) {
      t.field_keywords[k] = v.get<std::vector<std::string>>();
    }
  }
  return t;
}

inline KeywordTable load_keyword_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open keyword table: " + path);
  return keyword_table_from_json(nlohmann::json::parse(in));
}

inline const KeywordTable& default_keyword_table() {
  static const KeywordTable table = keyword_table_from_json(nlohmann::json::parse(R"JSON({
    "sales_keywords": ["包邮", "退", "价", "折", "赠", "shipping", "return", "price", "discount", "gift"],
    "currency_markers": ["元", "块", "¥", "￥", "$", "CNY", "yuan"],
    "original_price_markers": ["原价", "原来", "original", "was"],
    "price_markers": ["价", "只要", "到手", "仅需", "price", "only", "now"],
    "products": [
      {"name": "纯棉T恤", "category": "服装"},
      {"name": "T恤", "category": "服装"},
      {"name": "乳胶床垫", "category": "家居"},
      {"name": "牙膏", "category": "日用品"},
      {"name": "口红", "category": "美妆"},
      {"name": "苹果", "category": "水果"},
      {"name": "Pure Cotton T-Shirt", "category": "Clothing"},
      {"name": "T-Shirt", "category": "Clothing"},
      {"name": "Latex Mattress", "category": "Furniture"},
      {"name": "Toothpaste", "category": "Daily Necessities"}
    ],
    "emoji_rules": [
      {"symbol": "👉", "keywords": ["推荐", "recommend"]},
      {"symbol": "🕒", "keywords": ["限时", "秒杀", "抢购", "抽奖", "flash sale", "giveaway"]},
      {"symbol": "⌚", "keywords": ["最后", "马上结束", "倒计时", "last chance", "ending soon"]},
      {"symbol": "🌟", "keywords": ["亮点", "特色", "独家", "highlight"]},
      {"symbol": "🔍", "keywords": ["细节", "展示", "看一下", "detail"]},
      {"symbol": "📺", "keywords": ["下一款", "新产品", "next product"]},
      {"symbol": "🆕", "keywords": ["新品", "上新", "新款", "new arrival"]},
      {"symbol": "💰", "keywords": ["价", "元", "块", "price", "CNY"]},
      {"symbol": "🏷️", "keywords": ["折", "优惠", "券", "促销", "discount", "coupon"]},
      {"symbol": "👋", "keywords": ["下播", "再见", "goodbye"]},
      {"symbol": "🙏", "keywords": ["谢谢", "感谢", "thank"]}
    ],
    "free_shipping": {"yes": ["包邮", "免运费", "free shipping"], "no": ["不包邮", "运费自理", "no free shipping"]},
    "seven_day_return": {"yes": ["七天无理由", "7天无理由", "无理由退", "7-day return", "no reason return"],
                         "no": ["不支持退", "不退不换", "no returns"]},
    "fields": {
      "promotional_policy": ["原价", "优惠", "折", "券", "赠", "满减", "秒杀", "promotion", "discount", "coupon", "gift"],
      "after_sales": ["售后", "退换", "换货", "保修", "refund", "exchange", "warranty"],
      "product_description": ["纯棉", "面料", "材质", "质量", "品质", "cotton", "fabric", "quality"],
      "user_experience": ["舒服", "舒适", "透气", "好穿", "耐穿", "comfortable", "breathable", "durable"],
      "user_manual": ["洗", "晾", "漂白", "使用方法", "wash", "dry", "bleach"]
    }
  })JSON"));
  return table;
}

// ---------------------------------------------------------------------------
// Deterministic extractive condenser
// ---------------------------------------------------------------------------

inline bool contains_any(std::string_view text, const std::vector<std::string>& needles) {
  const auto hay = utf8::normalize(text);
  return std::any_of(needles.begin(), needles.end(), [&](const std::string& n) {
    const auto needle = utf8::normalize(n);
    return !needle.empty() && hay.find(needle) != std::string::npos;
  });
}

inline bool has_digit(std::string_view text) {
  for (std::size_t i = 0; i < text.size();) {
    auto d = utf8::decode(text, i);
    i += d.len;
    if (utf8::is_ascii_digit(d.cp) || (d.cp >= 0xFF10 && d.cp <= 0xFF19)) return true;
  }
  return false;
}

/// Clause boundaries: sentence punctuation (a '.' between digits is kept),
/// newlines, and, for CJK text, any whitespace.
inline std::vector<std::string> split_clauses(std::string_view text, bool whitespace_breaks) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    auto t = utf8::trim(cur);
    if (!t.empty()) out.emplace_back(t);
    cur.clear();
  };
  const auto cps = utf8::to_u32(text);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    bool brk = false;
    switch (cp) {
      case U'\n': case U',': case U';': case U'!': case U'?': case U'，': case U'。':
      case U'！': case U'？': case U'；': case U'、':
        brk = true;
        break;
      case U'.': {
        const bool numeric = i > 0 && i + 1 < cps.size() && utf8::is_ascii_digit(cps[i - 1]) &&
                             utf8::is_ascii_digit(cps[i + 1]);
        brk = !numeric;
        break;
      }
      default:
        brk = whitespace_breaks && utf8::is_space(cp);
    }
    if (brk) {
      flush();
    } else {
      utf8::append(cur, cp);
    }
  }
  flush();
  return out;
}

/// Keeps clauses carrying digits, currency markers, sales keywords or
/// product names, in input order and without repeats, until the next one
/// would exceed `limit`. Falls back to leading clauses when none qualify.
inline std::string extractive_condense(std::string_view window, std::size_t limit, LengthUnit unit,
                                       const KeywordTable& table = default_keyword_table()) {
  const bool cjk = unit == LengthUnit::graphemes;
  const auto clauses = split_clauses(window, cjk);
  const std::string sep = cjk ? "，" : ", ";
  auto informative = [&](const std::string& c) {
    if (has_digit(c) || contains_any(c, table.currency_markers) || contains_any(c, table.sales_keywords)) {
      return true;
    }
    return std::any_of(table.products.begin(), table.products.end(),
                       [&](const ProductEntry& p) { return contains_any(c, {p.name}); });
  };
  std::vector<std::string> picked;
  for (const auto& c : clauses) {
    if (informative(c) && std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
  }
  if (picked.empty()) {
    for (const auto& c : clauses) {
      if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
    }
  }
  std::string out;
  for (const auto& c : picked) {
    std::string candidate = out.empty() ? c : out + sep + c;
    if (measure(candidate, unit) > limit) {
      if (out.empty()) out = enforce_limit(c, limit, unit).text;
      break;
    }
    out = std::move(candidate);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Provider contract
// ---------------------------------------------------------------------------

class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& what, bool timeout = false)
      : std::runtime_error(what), timeout_(timeout) {}
  bool timeout() const { return timeout_; }

 private:
  bool timeout_;
};

/// complete() returns the model's text or throws ProviderError.
class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string complete(const Dialogue& dialogue, int64_t deadline_ms) = 0;
};

/// Offline stand-in driven entirely by a KeywordTable: extractive condense,
/// keyword-triggered emoji, keyword-table framework fields.
class MockLlmProvider final : public LlmProvider {
 public:
  explicit MockLlmProvider(KeywordTable table = default_keyword_table(), std::size_t limit = 50)
      : table_(std::move(table)), limit_(limit) {}

  std::string complete(const Dialogue& dialogue, int64_t /*deadline_ms*/) override {
    const auto kind = dialogue_kind(dialogue);
    if (!kind) throw ProviderError("mock provider: unrecognized dialogue");
    const auto lang = dialogue_language(dialogue);
    switch (*kind) {
      case PromptKind::condense: {
        const auto& window = dialogue[1].text;
        return extractive_condense(window, limit_, unit_for(window), table_);
      }
      case PromptKind::emoji:
        return emoji_reply(dialogue[1].text + "\n" + dialogue[2].text, lang);
      case PromptKind::framework:
        return framework_reply(dialogue[1].text, lang);
    }
    throw ProviderError("mock provider: unreachable");
  }

  const KeywordTable& table() const { return table_; }

 private:
  std::string emoji_reply(const std::string& text, PromptLanguage lang) const {
    std::string glyphs, reasons;
    for (const auto& rule : table_.emoji_rules) {
      for (const auto& kw : rule.keywords) {
        if (contains_any(text, {kw})) {
          if (!glyphs.empty()) glyphs.push_back(' ');
          glyphs += rule.symbol;
          if (!reasons.empty()) reasons += lang == PromptLanguage::zh ? "、" : ", ";
          reasons += kw;
          break;
        }
      }
    }
    if (glyphs.empty()) return lang == PromptLanguage::zh ? "无相关内容。" : "Nothing relevant.";
    return glyphs + "\n" + (lang == PromptLanguage::zh ? "理由：内容提到" + reasons + "。"
                                                       : "Reason: the content mentions " + reasons + ".");
  }

  static std::string first_number(std::string_view clause) {
    std::string num;
    for (std::size_t i = 0; i < clause.size(); ++i) {
      const char c = clause[i];
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && !num.empty() && i + 1 < clause.size() &&
           std::isdigit(static_cast<unsigned char>(clause[i + 1])))) {
        num.push_back(c);
      } else if (!num.empty()) {
        break;
      }
    }
    return num;
  }

  std::string framework_reply(const std::string& items_text, PromptLanguage lang) const {
    const bool zh = lang == PromptLanguage::zh;
    std::vector<std::string> clauses;
    std::string product, category;
    std::size_t line_start = 0;
    while (line_start <= items_text.size()) {
      auto nl = items_text.find('\n', line_start);
      if (nl == std::string::npos) nl = items_text.size();
      const auto item = std::string_view(items_text).substr(line_start, nl - line_start);
      line_start = nl + 1;
      // Longest product name mentioned; later items override earlier ones.
      const ProductEntry* best = nullptr;
      for (const auto& p : table_.products) {
        if (contains_any(item, {p.name}) && (!best || p.name.size() > best->name.size())) best = &p;
      }
      if (best) {
        product = best->name;
        category = best->category;
      }
      for (auto& c : split_clauses(item, utf8::is_cjk_dominant(item))) clauses.push_back(std::move(c));
    }

    std::string price, shipping, returns;
    for (const auto& c : clauses) {
      const auto num = first_number(c);
      const bool priced = contains_any(c, table_.currency_markers) || contains_any(c, table_.price_markers);
      if (!num.empty() && priced && !contains_any(c, table_.original_price_markers)) {
        price = num;
      }
      if (contains_any(c, table_.shipping_no)) {
        shipping = zh ? "否" : "No";
      } else if (contains_any(c, table_.shipping_yes)) {
        shipping = zh ? "是" : "Yes";
      }
      if (contains_any(c, table_.return_no)) {
        returns = zh ? "否" : "No";
      } else if (contains_any(c, table_.return_yes)) {
        returns = zh ? "是" : "Yes";
      }
    }
    auto collect = [&](const char* field) {
      const auto it = table_.field_keywords.find(field);
      if (it == table_.field_keywords.end()) return std::string();
      std::vector<std::string> hits;
      for (const auto& c : clauses) {
        if (hits.size() == 3) break;
        if (contains_any(c, it->second) && std::find(hits.begin(), hits.end(), c) == hits.end()) hits.push_back(c);
      }
      std::string joined;
      for (const auto& h : hits) {
        if (!joined.empty()) joined += zh ? "，" : "; ";
        joined += h;
      }
      return joined;
    };
    const std::array<std::string, 10> values = {
        product,  category,           collect("promotional_policy"), shipping,
        returns,  price,              collect("after_sales"),        collect("product_description"),
        collect("user_experience"), collect("user_manual"),
    };
    static constexpr std::array<std::string_view, 10> kZhLabels = {
        "商品", "类别", "促销政策", "是否包邮", "7 天无理由退货",
        "价格", "售后服务", "产品介绍", "使用体验", "使用说明书"};
    static constexpr std::array<std::string_view, 10> kEnLabels = {
        "Product", "Category", "Promotional Policy", "Free Shipping", "7-Day No Reason Return",
        "Price", "After-Sales Service", "Product Description", "User Experience", "User Manual"};
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out += zh ? kZhLabels[i] : kEnLabels[i];
      out += ": ";
      out += values[i].empty() ? "null" : values[i];
      out += "\n";
    }
    return out;
  }

  KeywordTable table_;
  std::size_t limit_;
};

/// One recorded exchange. `delay_ms` simulates latency; a delay beyond the
/// call deadline surfaces as a timeout.
struct CassetteEntry {
  std::string response;
  std::optional<std::string> error;
  int64_t delay_ms = 0;
};

/// Replays canned responses keyed by dialogue_key(). Cassette files are
/// line-delimited {"key", "response" | "error", "delay_ms"?, "kind"?}.
class CassetteLlmProvider final : public LlmProvider {
 public:
  CassetteLlmProvider() = default;
  explicit CassetteLlmProvider(std::map<std::string, CassetteEntry> entries) : entries_(std::move(entries)) {}

  static CassetteLlmProvider load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cassette: " + path);
    std::map<std::string, CassetteEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        CassetteEntry e;
        e.response = j.value("response", std::string());
        if (j.contains("error")) e.error = j["error"].get<std::string>();
        e.delay_ms = j.value("delay_ms", int64_t{0});
        entries[j.at("key").get<std::string>()] = std::move(e);
      } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error("cassette line " + std::to_string(line_no) + ": " + ex.what());
      }
    }
    return CassetteLlmProvider(std::move(entries));
  }

  void put(const Dialogue& d, CassetteEntry e) { entries_[dialogue_key(d)] = std::move(e); }

  std::string complete(const Dialogue& dialogue, int64_t deadline_ms) override {
    const auto it = entries_.find(dialogue_key(dialogue));
    if (it == entries_.end()) throw ProviderError("cassette miss for " + dialogue_key(dialogue));
    const auto& e = it->second;
    if (e.delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(std::min(e.delay_ms, deadline_ms)));
      if (e.delay_ms > deadline_ms) throw ProviderError("deadline exceeded", true);
    }
    if (e.error) throw ProviderError(*e.error);
    return e.response;
  }

 private:
  std::map<std::string, CassetteEntry> entries_;
};

/// Wraps another provider and captures every exchange for a cassette.
class RecordingLlmProvider final : public LlmProvider {
 public:
  explicit RecordingLlmProvider(LlmProvider& inner) : inner_(inner) {}

  std::string complete(const Dialogue& dialogue, int64_t deadline_ms) override {
    nlohmann::json rec = {{"key", dialogue_key(dialogue)}};
    if (auto k = dialogue_kind(dialogue)) {
      rec["kind"] = *k == PromptKind::condense ? "condense" : *k == PromptKind::emoji ? "emoji" : "framework";
    }
    try {
      auto text = inner_.complete(dialogue, deadline_ms);
      rec["response"] = text;
      record(std::move(rec));
      return text;
    } catch (const ProviderError& e) {
      rec["error"] = e.what();
      record(std::move(rec));
      throw;
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cassette: " + path);
    std::lock_guard lock(mu_);
    for (const auto& r : records_) out << r.dump() << '\n';
  }

 private:
  void record(nlohmann::json rec) {
    std::lock_guard lock(mu_);
    records_.push_back(std::move(rec));
  }

  LlmProvider& inner_;
  mutable std::mutex mu_;
  std::vector<nlohmann::json> records_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct CondensedUpdate {
  int64_t tick_index = 0;
  uint64_t generation = 0;
  std::string text;
  std::vector<EmojiTag> emojis;
  int64_t window_start_ms = 0;
  int64_t window_end_ms = 0;
  LengthUnit unit = LengthUnit::graphemes;
  bool truncated = false;
  bool degraded = false;

  bool operator==(const CondensedUpdate&) const = default;
};

inline nlohmann::json to_json(const CondensedUpdate& u) {
  nlohmann::json emojis = nlohmann::json::array();
  for (const auto& e : u.emojis) {
    emojis.push_back({{"meaning", emoji_entry(e.meaning).id}, {"symbol", e.symbol}});
  }
  return {{"tick_index", u.tick_index},
          {"window", {u.window_start_ms, u.window_end_ms}},
          {"text", u.text},
          {"emojis", emojis},
          {"unit", to_string(u.unit)},
          {"truncated", u.truncated},
          {"degraded", u.degraded}};
}

inline CondensedUpdate condensed_from_json(const nlohmann::json& j, uint64_t generation = 0) {
  CondensedUpdate u;
  u.tick_index = j.at("tick_index").get<int64_t>();
  u.generation = generation;
  u.text = j.at("text").get<std::string>();
  u.window_start_ms = j.at("window").at(0).get<int64_t>();
  u.window_end_ms = j.at("window").at(1).get<int64_t>();
  u.unit = j.value("unit", std::string("graphemes")) == "words" ? LengthUnit::words : LengthUnit::graphemes;
  u.truncated = j.value("truncated", false);
  u.degraded = j.value("degraded", false);
  for (const auto& e : j.value("emojis", nlohmann::json::array())) {
    if (auto m = emoji_meaning_from_id(e.at("meaning").get<std::string>())) {
      u.emojis.push_back({*m, e.value("symbol", std::string(emoji_entry(*m).symbol))});
    }
  }
  return u;
}

struct CondenseConfig {
  std::size_t limit = 50;
  int64_t deadline_ms = 20000;
  PromptLanguage language = PromptLanguage::zh;
  const KeywordTable* fallback_table = nullptr;
};

struct CondenseOutcome {
  CondensedUpdate update;
  /// The completed condense exchange; empty when the fallback was used.
  Dialogue dialogue;
};

/// Runs the condense turn for one tick and enforces the length bound. A
/// failed or empty reply degrades to the extractive rule over the window.
inline CondenseOutcome condense(LlmProvider& provider, const TickRequest& req, const CondenseConfig& cfg = {}) {
  if (utf8::trim(req.window_text).empty()) throw std::invalid_argument("condense needs a nonempty window");
  CondenseOutcome out;
  auto& u = out.update;
  u.tick_index = req.tick_index;
  u.generation = req.generation;
  u.window_start_ms = req.window_start_ms;
  u.window_end_ms = req.window_end_ms;
  u.unit = unit_for(req.window_text);

  const std::string inputs[] = {req.window_text};
  auto dialogue = render_prompt(PromptKind::condense, inputs, cfg.language);
  std::string reply;
  try {
    reply = std::string(utf8::trim(provider.complete(dialogue, cfg.deadline_ms)));
  } catch (const ProviderError&) {
    reply.clear();
  }
  if (reply.empty()) {
    const auto& table = cfg.fallback_table ? *cfg.fallback_table : default_keyword_table();
    u.text = extractive_condense(req.window_text, cfg.limit, u.unit, table);
    u.degraded = true;
    return out;
  }
  auto enforced = enforce_limit(reply, cfg.limit, u.unit);
  u.text = std::move(enforced.text);
  u.truncated = enforced.truncated;
  dialogue.push_back({Role::model, reply});
  out.dialogue = std::move(dialogue);
  return out;
}

/// Follow-up emoji turn on a completed condense exchange. Never throws on
/// provider failure; emoji are decorative.
inline std::vector<EmojiTag> select_emojis(LlmProvider& provider, const Dialogue& condense_dialogue,
                                           int64_t deadline_ms = 20000) {
  if (condense_dialogue.size() != 3 || condense_dialogue[2].role != Role::model) return {};
  const std::string inputs[] = {condense_dialogue[1].text, condense_dialogue[2].text};
  const auto dialogue = render_prompt(PromptKind::emoji, inputs, dialogue_language(condense_dialogue));
  try {
    return scan_emojis(provider.complete(dialogue, deadline_ms));
  } catch (const ProviderError&) {
    return {};
  }
}

/// The most recent `kMaxFrameworkItems` condensed texts, oldest first.
inline std::vector<std::string> framework_items(std::span<const CondensedUpdate> log) {
  const auto n = std::min(log.size(), kMaxFrameworkItems);
  std::vector<std::string> out;
  for (auto it = log.end() - static_cast<std::ptrdiff_t>(n); it != log.end(); ++it) out.push_back(it->text);
  return out;
}

/// Fresh framework dialogue over 1..10 items; returns the raw reply for the
/// parser. Throws ProviderError on failure.
inline std::string summarize_framework(LlmProvider& provider, std::span<const std::string> items,
                                       PromptLanguage lang = PromptLanguage::zh, int64_t deadline_ms = 20000) {
  const auto dialogue = render_prompt(PromptKind::framework, items, lang);
  return provider.complete(dialogue, deadline_ms);
}

}  // namespace livecap::summarize
