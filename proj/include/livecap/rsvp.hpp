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
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "livecap/utf8.hpp"

namespace livecap::rsvp {

inline constexpr int kDefaultRate = 180;

/// Byte range of one token inside the tokenized text.
struct TokenSpan {
  std::size_t offset;
  std::size_t length;
};

/// Script-aware segmentation. CJK runs yield one token per grapheme, other
/// runs split on whitespace. Punctuation sticks to the token right before
/// it; a lone Latin letter binds to the CJK grapheme after it ("T恤").
/// Tokens are contiguous spans and only whitespace lies between them.
inline std::vector<TokenSpan> tokenize_spans(std::string_view text) {
  std::vector<TokenSpan> out;
  bool open = false;            // last token may still grow
  bool single_letter = false;   // open token is exactly one Latin letter
  bool adjacent = false;        // no whitespace since the last token ended
  const char* base = text.data();
  for (auto g : utf8::graphemes(text)) {
    const auto off = static_cast<std::size_t>(g.data() - base);
    const char32_t cp = utf8::first_cp(g);
    auto extend = [&] { out.back().length = off + g.size() - out.back().offset; };
    if (utf8::is_space(cp)) {
      open = false;
      adjacent = false;
      continue;
    }
    if (utf8::is_cjk(cp)) {
      if (open && single_letter) {
        extend();
      } else {
        out.push_back({off, g.size()});
      }
      open = false;
      single_letter = false;
      adjacent = true;
      continue;
    }
    if (utf8::is_punct(cp) && !open && adjacent && !out.empty()) {
      extend();
      continue;
    }
    if (open) {
      extend();
      single_letter = false;
    } else {
      out.push_back({off, g.size()});
      open = true;
      single_letter = utf8::is_latin_letter(cp) && g.size() == 1;
    }
    adjacent = true;
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& s : tokenize_spans(text)) out.emplace_back(text.substr(s.offset, s.length));
  return out;
}

struct RsvpToken {
  std::string text;
  int64_t onset_ms = 0;
  int64_t duration_ms = 0;
  bool operator==(const RsvpToken&) const = default;
};

/// round(60000 / rate), half away from zero.
inline int64_t token_duration_ms(int rate) {
  if (rate <= 0) throw std::invalid_argument("rsvp rate must be positive");
  return (60000 + rate / 2) / rate;
}

inline std::vector<RsvpToken> schedule(const std::vector<std::string>& tokens, int rate, int64_t start_ms) {
  const auto d = token_duration_ms(rate);
  std::vector<RsvpToken> out;
  out.reserve(tokens.size());
  int64_t t = start_ms;
  for (const auto& tok : tokens) {
    out.push_back({tok, t, d});
    t += d;
  }
  return out;
}

/// One token put on screen by the player.
struct Display {
  std::string text;
  int64_t onset_ms = 0;
  int64_t duration_ms = 0;
  int64_t tick_index = 0;
  std::size_t index = 0;  // position within its tick's token list
  std::size_t count = 0;
};

/// Clock-driven presenter. poll(now) releases every token whose onset has
/// passed; pause freezes the remaining onsets and resume shifts them by the
/// paused span; set_rate reschedules only tokens not yet shown.
class Player {
 public:
  explicit Player(int rate = kDefaultRate) : rate_(rate), duration_(token_duration_ms(rate)) {}

  void enqueue(const std::vector<std::string>& tokens, int64_t now, int64_t tick_index = 0) {
    if (tokens.empty()) return;
    if (queue_.empty()) next_onset_ = earliest_start(paused_ ? std::max(now, paused_at_) : now);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      queue_.push_back({tokens[i], tick_index, i, tokens.size()});
    }
  }

  std::vector<Display> poll(int64_t now) {
    std::vector<Display> out;
    if (paused_) return out;
    while (!queue_.empty() && next_onset_ <= now) {
      auto p = std::move(queue_.front());
      queue_.pop_front();
      out.push_back({std::move(p.text), next_onset_, duration_, p.tick_index, p.index, p.count});
      last_onset_ = next_onset_;
      last_duration_ = duration_;
      next_onset_ += duration_;
    }
    return out;
  }

  void pause(int64_t now) {
    if (paused_) throw std::logic_error("rsvp player already paused");
    paused_ = true;
    paused_at_ = now;
  }

  void resume(int64_t now) {
    if (!paused_) throw std::logic_error("rsvp player is not paused");
    const int64_t shift = std::max<int64_t>(0, now - paused_at_);
    next_onset_ += shift;
    if (last_onset_) *last_onset_ += shift;
    paused_ = false;
  }

  void set_rate(int rate, int64_t now) {
    duration_ = token_duration_ms(rate);
    rate_ = rate;
    if (queue_.empty()) return;
    const int64_t floor = paused_ ? std::max(now, paused_at_) : now;
    next_onset_ = last_onset_ ? std::max(floor, *last_onset_ + duration_) : std::max(floor, next_onset_);
  }

  /// Drops everything queued; the rate and pause state are user settings
  /// and survive.
  void clear() {
    queue_.clear();
    last_onset_.reset();
    last_duration_ = 0;
  }

  std::optional<int64_t> next_due() const {
    if (paused_ || queue_.empty()) return std::nullopt;
    return next_onset_;
  }

  bool paused() const { return paused_; }
  int rate() const { return rate_; }
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Pending {
    std::string text;
    int64_t tick_index;
    std::size_t index;
    std::size_t count;
  };

  int64_t earliest_start(int64_t now) const {
    return last_onset_ ? std::max(now, *last_onset_ + last_duration_) : now;
  }

  int rate_;
  int64_t duration_;
  std::deque<Pending> queue_;
  int64_t next_onset_ = 0;
  std::optional<int64_t> last_onset_;
  int64_t last_duration_ = 0;
  bool paused_ = false;
  int64_t paused_at_ = 0;
};

}  // namespace livecap::rsvp
