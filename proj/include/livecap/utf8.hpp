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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace livecap::utf8 {

struct Decoded {
  char32_t cp;
  std::size_t len;
};

/// Decodes one code point at `pos`. Malformed input yields U+FFFD and
/// consumes a single byte so iteration always makes progress.
inline Decoded decode(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 < 0 || b0 < 0xC2) return {0xFFFD, 1};
    return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  }
  if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 < 0 || c2 < 0) return {0xFFFD, 1};
    const char32_t cp = ((b0 & 0x0F) << 12) | (c1 << 6) | c2;
    if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) return {0xFFFD, 1};
    return {cp, 3};
  }
  if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 < 0 || c2 < 0 || c3 < 0) return {0xFFFD, 1};
    const char32_t cp = ((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3;
    if (cp < 0x10000 || cp > 0x10FFFF) return {0xFFFD, 1};
    return {cp, 4};
  }
  return {0xFFFD, 1};
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::u32string to_u32(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode(s, i);
    out.push_back(d.cp);
    i += d.len;
  }
  return out;
}

inline bool is_space(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
    case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

/// Han ideographs, kana, hangul and bopomofo.
inline bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x3134F) ||
         (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0x31F0 && cp <= 0x31FF) ||
         (cp >= 0x3100 && cp <= 0x312F) || (cp >= 0xAC00 && cp <= 0xD7AF) ||
         (cp >= 0x1100 && cp <= 0x11FF) || (cp >= 0x3130 && cp <= 0x318F);
}

/// Fullwidth and ideographic punctuation (the 。，「」 family).
inline bool is_cjk_punct(char32_t cp) {
  return (cp >= 0x3001 && cp <= 0x303F) || (cp >= 0xFE30 && cp <= 0xFE4F) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

inline bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  return is_cjk_punct(cp) || (cp >= 0x2010 && cp <= 0x2027) ||
         (cp >= 0x2030 && cp <= 0x205E) || cp == 0x00B7;
}

inline bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

inline bool is_latin_letter(char32_t cp) {
  return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') ||
         (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7);
}

namespace detail {

inline bool is_extend(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x0483 && cp <= 0x0489) ||
         (cp >= 0x0591 && cp <= 0x05BD) || (cp >= 0x0610 && cp <= 0x061A) ||
         (cp >= 0x064B && cp <= 0x065F) || cp == 0x0E31 ||
         (cp >= 0x0E34 && cp <= 0x0E3A) || (cp >= 0x0E47 && cp <= 0x0E4E) ||
         (cp >= 0x1AB0 && cp <= 0x1AFF) || (cp >= 0x1DC0 && cp <= 0x1DFF) ||
         (cp >= 0x20D0 && cp <= 0x20FF) || (cp >= 0xFE00 && cp <= 0xFE0F) ||
         (cp >= 0xFE20 && cp <= 0xFE2F) || (cp >= 0x3099 && cp <= 0x309A) ||
         (cp >= 0x1F3FB && cp <= 0x1F3FF) || (cp >= 0xE0020 && cp <= 0xE007F) ||
         (cp >= 0xE0100 && cp <= 0xE01EF) || cp == 0x200C || cp == 0x200D ||
         (cp >= 0x1160 && cp <= 0x11FF);
}

inline bool is_regional(char32_t cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }

}  // namespace detail

/// Splits into extended grapheme clusters. Covers combining marks,
/// variation selectors, emoji modifiers, ZWJ sequences, flags, CRLF and
/// conjoining jamo; other UAX #29 rules are not modelled.
inline std::vector<std::string_view> graphemes(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t start = i;
    auto d = decode(s, i);
    i += d.len;
    char32_t prev = d.cp;
    if (prev == U'\r' && i < s.size() && s[i] == '\n') {
      ++i;
      out.push_back(s.substr(start, i - start));
      continue;
    }
    int regional = detail::is_regional(prev) ? 1 : 0;
    while (i < s.size()) {
      const auto next = decode(s, i);
      const bool joins = detail::is_extend(next.cp) || prev == 0x200D ||
                         (regional == 1 && detail::is_regional(next.cp));
      if (!joins) break;
      if (detail::is_regional(next.cp)) ++regional;
      prev = next.cp;
      i += next.len;
    }
    out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline char32_t first_cp(std::string_view s) { return s.empty() ? 0 : decode(s, 0).cp; }

inline char32_t last_cp(std::string_view s) {
  if (s.empty()) return 0;
  std::size_t pos = s.size() - 1;
  while (pos > 0 && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) --pos;
  return decode(s, pos).cp;
}

inline bool all_space(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode(s, i);
    if (!is_space(d.cp)) return false;
    i += d.len;
  }
  return true;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size()) {
    const auto d = decode(s, b);
    if (!is_space(d.cp)) break;
    b += d.len;
  }
  std::size_t e = s.size();
  while (e > b) {
    std::size_t p = e - 1;
    while (p > b && (static_cast<unsigned char>(s[p]) & 0xC0) == 0x80) --p;
    if (!is_space(decode(s, p).cp)) break;
    e = p;
  }
  return s.substr(b, e - b);
}

/// Whitespace-delimited words as views into `s`.
inline std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0, start = std::string_view::npos;
  while (i < s.size()) {
    const auto d = decode(s, i);
    if (is_space(d.cp)) {
      if (start != std::string_view::npos) out.push_back(s.substr(start, i - start));
      start = std::string_view::npos;
    } else if (start == std::string_view::npos) {
      start = i;
    }
    i += d.len;
  }
  if (start != std::string_view::npos) out.push_back(s.substr(start));
  return out;
}

/// True when CJK ideographs outnumber (or tie) the non-CJK words.
inline bool is_cjk_dominant(std::string_view s) {
  std::size_t cjk = 0, other_words = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode(s, i);
    i += d.len;
    if (is_cjk(d.cp)) {
      ++cjk;
      in_word = false;
    } else if (is_latin_letter(d.cp) || is_ascii_digit(d.cp)) {
      if (!in_word) ++other_words;
      in_word = true;
    } else if (d.cp != U'.' || !in_word) {
      in_word = false;
    }
  }
  return cjk > 0 && cjk >= other_words;
}

/// Joins two transcript pieces: no separator across a CJK/CJK boundary,
/// a single space otherwise.
inline std::string join_pieces(std::string_view a, std::string_view b) {
  if (a.empty()) return std::string(b);
  if (b.empty()) return std::string(a);
  const char32_t l = last_cp(a), r = first_cp(b);
  const bool tight = (is_cjk(l) || is_cjk_punct(l)) && (is_cjk(r) || is_cjk_punct(r));
  std::string out(a);
  if (!tight) out.push_back(' ');
  out.append(b);
  return out;
}

/// Comparison form: fullwidth ASCII folded to halfwidth, whitespace runs
/// collapsed to one space and trimmed, ASCII letters lowercased.
inline std::string normalize(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size();) {
    auto d = decode(s, i);
    i += d.len;
    char32_t cp = d.cp;
    if (cp >= 0xFF01 && cp <= 0xFF5E) cp -= 0xFEE0;
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (cp >= U'A' && cp <= U'Z') cp += 32;
    if (pending_space) out.push_back(' ');
    pending_space = false;
    append(out, cp);
  }
  return out;
}

}  // namespace livecap::utf8
