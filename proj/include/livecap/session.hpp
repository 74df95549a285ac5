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
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "livecap/framework.hpp"
#include "livecap/ingest.hpp"
#include "livecap/summarize.hpp"
#include "livecap/tick.hpp"
#include "livecap/utf8.hpp"

namespace livecap {

enum class DisplayMode { raw, condensed, framework };

inline std::string_view to_string(DisplayMode m) {
  switch (m) {
    case DisplayMode::raw: return "raw";
    case DisplayMode::condensed: return "condensed";
    case DisplayMode::framework: return "framework";
  }
  return "raw";
}

inline std::optional<DisplayMode> mode_from_string(std::string_view s) {
  if (s == "raw") return DisplayMode::raw;
  if (s == "condensed") return DisplayMode::condensed;
  if (s == "framework") return DisplayMode::framework;
  return std::nullopt;
}

struct SessionState {
  std::string session_id;
  std::string started_at;  // wall clock, names the history file
  bool capturing = false;
  DisplayMode mode = DisplayMode::raw;
  uint64_t generation = 0;
  std::vector<TranscriptSegment> buffer;  // sorted by t_start_ms
  int64_t tick_index = 0;
  int64_t capture_origin_ms = 0;
  int rsvp_rate = 180;
  std::vector<summarize::CondensedUpdate> condensed_log;
  framework::FrameworkRecord framework_current;
  std::vector<framework::FrameworkRecord> framework_snapshots;
  uint64_t stale_segments = 0;
  std::optional<std::string> history_id;
};

enum class AppendResult { appended, revised, stale, rejected };

/// Adds or revises a segment. Stale generations and segments arriving
/// while not capturing are dropped; a seq already finalized cannot change.
inline AppendResult append_segment(SessionState& state, const TranscriptSegment& seg) {
  if (seg.generation != state.generation) {
    ++state.stale_segments;
    return AppendResult::stale;
  }
  if (!state.capturing) return AppendResult::rejected;
  auto existing = std::find_if(state.buffer.begin(), state.buffer.end(),
                               [&](const TranscriptSegment& s) { return s.seq == seg.seq; });
  if (existing != state.buffer.end()) {
    if (existing->final) return AppendResult::rejected;
    const bool moved = existing->t_start_ms != seg.t_start_ms;
    *existing = seg;
    if (moved) {
      std::stable_sort(state.buffer.begin(), state.buffer.end(),
                       [](const auto& a, const auto& b) { return a.t_start_ms < b.t_start_ms; });
    }
    return AppendResult::revised;
  }
  auto pos = std::upper_bound(state.buffer.begin(), state.buffer.end(), seg.t_start_ms,
                              [](int64_t t, const TranscriptSegment& s) { return t < s.t_start_ms; });
  state.buffer.insert(pos, seg);
  return AppendResult::appended;
}

/// Removes a provisional segment the recognizer abandoned.
inline bool drop_provisional(SessionState& state, uint64_t seq) {
  auto it = std::find_if(state.buffer.begin(), state.buffer.end(),
                         [&](const TranscriptSegment& s) { return s.seq == seq && !s.final; });
  if (it == state.buffer.end()) return false;
  state.buffer.erase(it);
  return true;
}

inline bool overlaps(const TranscriptSegment& s, int64_t start, int64_t end) {
  if (s.t_start_ms == s.t_end_ms) return s.t_start_ms >= start && s.t_start_ms < end;
  return s.t_start_ms < end && s.t_end_ms > start;
}

/// Text of every buffered segment (provisional included) overlapping
/// [max(floor_ms, end_ms - span_ms), end_ms).
inline std::string window_text(const SessionState& state, int64_t end_ms, int64_t span_ms = kDefaultWindowMs,
                               int64_t floor_ms = 0) {
  const int64_t start = std::max(floor_ms, end_ms - span_ms);
  std::string out;
  for (const auto& s : state.buffer) {
    if (overlaps(s, start, end_ms)) out = utf8::join_pieces(out, s.text);
  }
  return out;
}

inline int64_t next_tick_due(const SessionState& state, int64_t tick_ms = kDefaultTickMs) {
  return state.capture_origin_ms + tick_ms * (state.tick_index + 1);
}

/// Produces the request for the next tick once `now_ms` has reached it.
inline std::optional<TickRequest> on_tick(SessionState& state, int64_t now_ms, int64_t tick_ms = kDefaultTickMs,
                                          int64_t window_ms = kDefaultWindowMs) {
  if (!state.capturing || now_ms < next_tick_due(state, tick_ms)) return std::nullopt;
  const auto w = tick_window(state.capture_origin_ms, state.tick_index, tick_ms, window_ms);
  TickRequest req;
  req.tick_index = state.tick_index;
  req.generation = state.generation;
  req.window_start_ms = w.start_ms;
  req.window_end_ms = w.end_ms;
  req.window_text = window_text(state, w.end_ms, window_ms, state.capture_origin_ms);
  ++state.tick_index;
  return req;
}

/// Bumps the generation, empties all content and realigns ticks to now.
inline void clear(SessionState& state, int64_t now_ms) {
  ++state.generation;
  state.buffer.clear();
  state.condensed_log.clear();
  state.framework_current = {};
  state.framework_snapshots.clear();
  state.tick_index = 0;
  state.capture_origin_ms = now_ms;
  state.history_id.reset();
}

// ---------------------------------------------------------------------------
// History
// ---------------------------------------------------------------------------

/// UTC ISO-8601 with milliseconds, e.g. 2026-10-16T09:15:02.123Z.
inline std::string iso8601_utc(std::chrono::system_clock::time_point tp) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
  return out;
}

inline std::string wall_now() { return iso8601_utc(std::chrono::system_clock::now()); }

struct HistoryRecord {
  std::string id;
  std::string session_id;
  std::string started_at;
  uint64_t generation = 0;
  std::vector<TranscriptSegment> segments;
  std::vector<summarize::CondensedUpdate> condensed;
  std::vector<framework::FrameworkRecord> framework_snapshots;

  bool operator==(const HistoryRecord&) const = default;
};

struct HistorySummary {
  std::string id;
  std::string session_id;
  std::string started_at;
  std::size_t segments = 0;
  std::size_t condensed = 0;
  std::size_t framework_snapshots = 0;
};

class HistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One line-delimited file per session segment, named from its start time
/// without colons. Every line carries a "kind" of segment, condensed,
/// framework or event.
class HistoryStore {
 public:
  explicit HistoryStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  /// Writes `rec` (replacing the file when rec.id is set) and returns its
  /// id. The write goes through a temp file and rename.
  std::string save(const HistoryRecord& rec) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw HistoryError("cannot create history dir " + dir_.string() + ": " + ec.message());
    std::string id = rec.id.empty() ? fresh_id(rec.started_at) : rec.id;
    const auto path = dir_ / (id + ".jsonl");
    const auto tmp = dir_ / (id + ".jsonl.tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw HistoryError("cannot write " + tmp.string());
      out << nlohmann::json{{"kind", "event"},
                            {"event", "session"},
                            {"session_id", rec.session_id},
                            {"started_at", rec.started_at},
                            {"generation", rec.generation}}
                 .dump()
          << '\n';
      for (const auto& s : rec.segments) {
        auto j = to_json(s);
        j["kind"] = "segment";
        out << j.dump() << '\n';
      }
      for (const auto& c : rec.condensed) {
        auto j = summarize::to_json(c);
        j["kind"] = "condensed";
        out << j.dump() << '\n';
      }
      for (const auto& f : rec.framework_snapshots) {
        auto j = framework::to_json(f);
        j["kind"] = "framework";
        j["text"] = framework::render(f);
        out << j.dump() << '\n';
      }
      out.flush();
      if (!out) throw HistoryError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw HistoryError("cannot finalize " + path.string() + ": " + ec.message());
    return id;
  }

  HistoryRecord load(const std::string& id) const {
    if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos) {
      throw HistoryError("invalid history id: " + id);
    }
    std::ifstream in(dir_ / (id + ".jsonl"), std::ios::binary);
    if (!in) throw HistoryError("no history record " + id);
    HistoryRecord rec;
    rec.id = id;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "event") {
          if (j.value("event", std::string()) == "session") {
            rec.session_id = j.value("session_id", std::string());
            rec.started_at = j.value("started_at", std::string());
            rec.generation = j.value("generation", uint64_t{0});
          }
        } else if (kind == "segment") {
          auto copy = j;
          copy.erase("kind");
          auto seg = parse_fixture_record(copy.dump(), line_no);
          seg.generation = rec.generation;
          rec.segments.push_back(std::move(seg));
        } else if (kind == "condensed") {
          rec.condensed.push_back(summarize::condensed_from_json(j, rec.generation));
        } else if (kind == "framework") {
          rec.framework_snapshots.push_back(framework::record_from_json(j));
        } else {
          throw HistoryError("unknown kind '" + kind + "'");
        }
      } catch (const nlohmann::json::exception& e) {
        throw HistoryError(id + " line " + std::to_string(line_no) + ": " + e.what());
      } catch (const FixtureError& e) {
        throw HistoryError(id + ": " + e.what());
      }
    }
    return rec;
  }

  /// Ordered by start time, then id.
  std::vector<HistorySummary> list() const {
    std::vector<HistorySummary> out;
    std::error_code ec;
    if (!std::filesystem::is_directory(dir_, ec)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      const auto& p = entry.path();
      if (p.extension() != ".jsonl") continue;
      const auto rec = load(p.stem().string());
      out.push_back({rec.id, rec.session_id, rec.started_at, rec.segments.size(), rec.condensed.size(),
                     rec.framework_snapshots.size()});
    }
    std::sort(out.begin(), out.end(), [](const HistorySummary& a, const HistorySummary& b) {
      return std::tie(a.started_at, a.id) < std::tie(b.started_at, b.id);
    });
    return out;
  }

  void save_appearance(const nlohmann::json& prefs) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    std::ofstream out(dir_ / "appearance.json", std::ios::binary | std::ios::trunc);
    if (!out) throw HistoryError("cannot write appearance preferences");
    out << prefs.dump() << '\n';
  }

  nlohmann::json load_appearance() const {
    std::ifstream in(dir_ / "appearance.json");
    if (!in) return nlohmann::json::object();
    try {
      auto j = nlohmann::json::parse(in);
      return j.is_object() ? j : nlohmann::json::object();
    } catch (const nlohmann::json::exception&) {
      return nlohmann::json::object();
    }
  }

 private:
  std::string fresh_id(const std::string& started_at) const {
    std::string base;
    for (char c : started_at) {
      if (c != ':') base.push_back(c);
    }
    if (base.empty()) base = "session";
    std::string id = base;
    for (int n = 2; std::filesystem::exists(dir_ / (id + ".jsonl")); ++n) {
      id = base + "-" + std::to_string(n);
    }
    return id;
  }

  std::filesystem::path dir_;
};

inline HistoryRecord history_record(const SessionState& state) {
  HistoryRecord rec;
  rec.id = state.history_id.value_or("");
  rec.session_id = state.session_id;
  rec.started_at = state.started_at;
  rec.generation = state.generation;
  rec.segments = state.buffer;
  rec.condensed = state.condensed_log;
  rec.framework_snapshots = state.framework_snapshots;
  return rec;
}

/// Persists the current content. The first save of a session (or of the
/// content since the last clear) allocates a record id; later saves rewrite
/// the same record.
inline std::string save_history(SessionState& state, HistoryStore& store) {
  const auto id = store.save(history_record(state));
  state.history_id = id;
  return id;
}

}  // namespace livecap
