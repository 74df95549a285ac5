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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "livecap/utf8.hpp"

namespace livecap::framework {

// The ten sales fields, in the order the model is asked to emit them.
enum class Field : std::size_t {
  product,
  category,
  promotional_policy,
  free_shipping,
  seven_day_return,
  price,
  after_sales,
  product_description,
  user_experience,
  user_manual,
};

inline constexpr std::size_t kFieldCount = 10;

inline constexpr std::array<Field, kFieldCount> kAllFields = {
    Field::product,         Field::category,    Field::promotional_policy,
    Field::free_shipping,   Field::seven_day_return, Field::price,
    Field::after_sales,     Field::product_description, Field::user_experience,
    Field::user_manual,
};

/// snake_case identifier used in JSON payloads and annotation files.
inline constexpr std::array<std::string_view, kFieldCount> kFieldIds = {
    "product",     "category",      "promotional_policy",  "free_shipping",   "seven_day_return",
    "price",       "after_sales",   "product_description", "user_experience", "user_manual",
};

/// Canonical English label used by render().
inline constexpr std::array<std::string_view, kFieldCount> kCanonicalLabels = {
    "Product",
    "Category",
    "Promotional Policy",
    "Free Shipping",
    "7-Day No Reason Return",
    "Price",
    "After-Sales Service",
    "Product Description",
    "User Experience",
    "User Manual",
};

inline constexpr std::array<std::string_view, kFieldCount> kChineseLabels = {
    "商品", "类别", "促销政策", "是否包邮", "7 天无理由退货",
    "价格", "售后服务", "产品介绍", "使用体验", "使用说明书",
};

inline std::size_t index_of(Field f) { return static_cast<std::size_t>(f); }
inline std::string_view field_id(Field f) { return kFieldIds[index_of(f)]; }

inline std::optional<Field> field_from_id(std::string_view id) {
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (kFieldIds[i] == id) return kAllFields[i];
  }
  return std::nullopt;
}

struct TickRange {
  int64_t first = 0;
  int64_t last = 0;
  bool operator==(const TickRange&) const = default;
};

struct FrameworkRecord {
  std::array<std::optional<std::string>, kFieldCount> fields{};
  std::optional<TickRange> provenance;

  const std::optional<std::string>& get(Field f) const { return fields[index_of(f)]; }
  std::optional<std::string>& get(Field f) { return fields[index_of(f)]; }

  bool empty() const {
    return std::all_of(fields.begin(), fields.end(), [](const auto& v) { return !v.has_value(); });
  }

  bool operator==(const FrameworkRecord&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParseWarning {
  enum class Kind { unknown_line, missing_field, stripped_fence, reordered_field };
  Kind kind;
  std::size_t line = 0;  // 1-based; 0 for missing_field
  std::optional<Field> field;
};

inline std::string_view to_string(ParseWarning::Kind k) {
  switch (k) {
    case ParseWarning::Kind::unknown_line: return "unknown_line";
    case ParseWarning::Kind::missing_field: return "missing_field";
    case ParseWarning::Kind::stripped_fence: return "stripped_fence";
    case ParseWarning::Kind::reordered_field: return "reordered_field";
  }
  return "unknown_line";
}

struct ParseReport {
  FrameworkRecord record;
  std::vector<ParseWarning> warnings;

  std::size_t count(ParseWarning::Kind k) const {
    return static_cast<std::size_t>(std::count_if(
        warnings.begin(), warnings.end(), [k](const ParseWarning& w) { return w.kind == k; }));
  }
};

namespace detail {

// Label key: ASCII folded to lowercase, with whitespace, '-', '_' and '*'
// removed, so "7-day Unconditional Return" and "7 天无理由退货" compare
// loosely.
inline std::string label_key(std::string_view label) {
  std::string key;
  for (char32_t cp : utf8::to_u32(utf8::normalize(label))) {
    if (utf8::is_space(cp) || cp == U'-' || cp == U'_' || cp == U'*') continue;
    utf8::append(key, cp);
  }
  return key;
}

struct Alias {
  std::string_view label;
  Field field;
};

// Prompt wording in both languages plus the variants seen in annotated
// reference outputs.
inline constexpr Alias kAliases[] = {
    {"Product", Field::product},
    {"商品", Field::product},
    {"Category", Field::category},
    {"类别", Field::category},
    {"Promotional Policy", Field::promotional_policy},
    {"Promotion Policy", Field::promotional_policy},
    {"促销政策", Field::promotional_policy},
    {"Free Shipping", Field::free_shipping},
    {"是否包邮", Field::free_shipping},
    {"7-Day No Reason Return", Field::seven_day_return},
    {"7-day Unconditional Return", Field::seven_day_return},
    {"7 天无理由退货", Field::seven_day_return},
    {"七天无理由退货", Field::seven_day_return},
    {"Price", Field::price},
    {"价格", Field::price},
    {"After-Sales Service", Field::after_sales},
    {"售后服务", Field::after_sales},
    {"Product Description", Field::product_description},
    {"Product Introduction", Field::product_description},
    {"产品介绍", Field::product_description},
    {"User Experience", Field::user_experience},
    {"Usage Experience", Field::user_experience},
    {"使用体验", Field::user_experience},
    {"User Manual", Field::user_manual},
    {"使用说明书", Field::user_manual},
};

inline std::optional<Field> match_label(std::string_view label) {
  const auto key = label_key(label);
  if (key.empty()) return std::nullopt;
  for (const auto& a : kAliases) {
    if (label_key(a.label) == key) return a.field;
  }
  return std::nullopt;
}

// Drops markdown list markers and bold markers that models wrap labels in.
inline std::string_view strip_decoration(std::string_view line) {
  while (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == ' ')) {
    line.remove_prefix(1);
  }
  if (line.size() >= 3 && line.substr(0, 3) == "\xE2\x80\xA2") line.remove_prefix(3);  // bullet
  return utf8::trim(line);
}

inline bool is_null_token(std::string_view v) {
  const auto n = utf8::normalize(v);
  return n.empty() || n == "null" || n == "none" || n == "n/a";
}

}  // namespace detail

/// Tolerant parser for the ten-line framework format. Accepts Chinese or
/// English labels, ':' or '：', fenced output and list decoration. Throws
/// ParseError when not a single field line is recognized.
inline ParseReport parse_framework(std::string_view text) {
  ParseReport report;
  std::array<bool, kFieldCount> seen{};
  std::size_t recognized = 0;
  std::optional<std::size_t> last_index;
  bool in_fence = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = utf8::trim(raw);
    if (line.empty()) continue;
    if (line.substr(0, 3) == "```") {
      // One warning per fenced block, reported at the opening line.
      if (!in_fence) report.warnings.push_back({ParseWarning::Kind::stripped_fence, line_no, std::nullopt});
      in_fence = !in_fence;
      continue;
    }
    const auto body = detail::strip_decoration(line);
    std::size_t sep = std::string_view::npos, sep_len = 0;
    const auto ascii = body.find(':');
    const auto wide = body.find("\xEF\xBC\x9A");  // U+FF1A
    if (ascii != std::string_view::npos && (wide == std::string_view::npos || ascii < wide)) {
      sep = ascii;
      sep_len = 1;
    } else if (wide != std::string_view::npos) {
      sep = wide;
      sep_len = 3;
    }
    std::optional<Field> field;
    if (sep != std::string_view::npos) field = detail::match_label(body.substr(0, sep));
    if (!field) {
      report.warnings.push_back({ParseWarning::Kind::unknown_line, line_no, std::nullopt});
      continue;
    }
    ++recognized;
    const auto idx = index_of(*field);
    if (last_index && idx <= *last_index) {
      report.warnings.push_back({ParseWarning::Kind::reordered_field, line_no, field});
    }
    last_index = idx;
    seen[idx] = true;
    auto value = utf8::trim(body.substr(sep + sep_len));
    if (value.size() >= 4 && value.substr(0, 2) == "**") value = utf8::trim(value.substr(2));
    if (detail::is_null_token(value)) {
      report.record.fields[idx].reset();
    } else {
      report.record.fields[idx] = std::string(value);
    }
  }
  if (recognized == 0) throw ParseError("no framework field lines recognized");
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (!seen[i]) report.warnings.push_back({ParseWarning::Kind::missing_field, 0, kAllFields[i]});
  }
  return report;
}

/// Canonical form: ten lines, English labels, ": " separator, "null" for
/// absent values, each line newline-terminated.
inline std::string render(const FrameworkRecord& r) {
  std::string out;
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    out.append(kCanonicalLabels[i]);
    out.append(": ");
    out.append(r.fields[i] ? *r.fields[i] : std::string("null"));
    out.push_back('\n');
  }
  return out;
}

/// Accumulation: a present value in `next` wins, an absent one keeps
/// `prev`. Provenance becomes the hull of both tick ranges.
inline FrameworkRecord merge(const FrameworkRecord& prev, const FrameworkRecord& next) {
  FrameworkRecord out = prev;
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (next.fields[i]) out.fields[i] = next.fields[i];
  }
  if (next.provenance) {
    if (out.provenance) {
      out.provenance = TickRange{std::min(out.provenance->first, next.provenance->first),
                                 std::max(out.provenance->last, next.provenance->last)};
    } else {
      out.provenance = next.provenance;
    }
  }
  return out;
}

inline nlohmann::json to_json(const FrameworkRecord& r) {
  nlohmann::json fields = nlohmann::json::object();
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    fields[std::string(kFieldIds[i])] = r.fields[i] ? nlohmann::json(*r.fields[i]) : nlohmann::json();
  }
  nlohmann::json j = {{"fields", fields}};
  j["ticks"] = r.provenance ? nlohmann::json::array({r.provenance->first, r.provenance->last})
                            : nlohmann::json();
  return j;
}

inline FrameworkRecord record_from_json(const nlohmann::json& j) {
  FrameworkRecord r;
  const auto& fields = j.at("fields");
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    const auto key = std::string(kFieldIds[i]);
    if (fields.contains(key) && fields[key].is_string()) r.fields[i] = fields[key].get<std::string>();
  }
  if (j.contains("ticks") && j["ticks"].is_array() && j["ticks"].size() == 2) {
    r.provenance = TickRange{j["ticks"][0].get<int64_t>(), j["ticks"][1].get<int64_t>()};
  }
  return r;
}

// ---------------------------------------------------------------------------
// Discrepancy classification
// ---------------------------------------------------------------------------

enum class DiscrepancyReason {
  incorrect_information,
  confused_information,
  missing_information,
  fabricated_information,
  interpret_out_of_context,
};

inline std::string_view to_string(DiscrepancyReason r) {
  switch (r) {
    case DiscrepancyReason::incorrect_information: return "incorrect_information";
    case DiscrepancyReason::confused_information: return "confused_information";
    case DiscrepancyReason::missing_information: return "missing_information";
    case DiscrepancyReason::fabricated_information: return "fabricated_information";
    case DiscrepancyReason::interpret_out_of_context: return "interpret_out_of_context";
  }
  return "incorrect_information";
}

/// Annotator hints for one field comparison. The classifier never infers
/// these; confused vs. out-of-context depends on them.
struct AnnotationContext {
  std::vector<std::string> accepted_paraphrases;
  std::vector<std::string> other_products;
  std::vector<std::string> subcategories;
};

/// nullopt means the values match.
inline std::optional<DiscrepancyReason> classify_discrepancy(
    const std::optional<std::string>& expected, const std::optional<std::string>& actual,
    const AnnotationContext& ctx = {}) {
  if (!expected && !actual) return std::nullopt;
  if (expected && !actual) return DiscrepancyReason::missing_information;
  if (!expected && actual) return DiscrepancyReason::fabricated_information;
  const auto exp = utf8::normalize(*expected);
  const auto act = utf8::normalize(*actual);
  if (exp == act) return std::nullopt;
  for (const auto& p : ctx.accepted_paraphrases) {
    if (utf8::normalize(p) == act) return std::nullopt;
  }
  for (const auto& other : ctx.other_products) {
    const auto o = utf8::normalize(other);
    if (!o.empty() && act.find(o) != std::string::npos) return DiscrepancyReason::confused_information;
  }
  for (const auto& sub : ctx.subcategories) {
    if (utf8::normalize(sub) == act) return DiscrepancyReason::interpret_out_of_context;
  }
  return DiscrepancyReason::incorrect_information;
}

}  // namespace livecap::framework
