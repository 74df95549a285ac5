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
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "livecap/clock.hpp"

namespace livecap {

// ---------------------------------------------------------------------------
// Audio chunking
// ---------------------------------------------------------------------------

struct AudioChunk {
  uint64_t seq = 0;
  std::vector<uint8_t> bytes;
  int64_t emit_time_ms = 0;
};

struct ChunkerConfig {
  std::size_t chunk_bytes = 640;
  int64_t interval_ms = 40;
};

inline double throughput_bytes_per_second(const ChunkerConfig& cfg) {
  return static_cast<double>(cfg.chunk_bytes) * 1000.0 / static_cast<double>(cfg.interval_ms);
}

struct IngestError {
  std::string message;
  bool retriable = false;
};

/// Slices `source` into fixed-size chunks paced on `clock`: chunk k is
/// emitted at start + k * interval_ms. A short trailing chunk is flushed at
/// end-of-stream. The format is opaque; no sample alignment is assumed.
/// Returns the error that terminated the stream, if any.
inline std::optional<IngestError> chunk_audio(std::istream& source, const ChunkerConfig& cfg,
                                              Clock& clock,
                                              const std::function<void(AudioChunk)>& emit) {
  if (cfg.chunk_bytes == 0 || cfg.interval_ms <= 0) {
    throw std::invalid_argument("chunk_bytes and interval_ms must be positive");
  }
  const int64_t start = clock.now_ms();
  uint64_t seq = 0;
  std::vector<uint8_t> buf(cfg.chunk_bytes);
  while (true) {
    source.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (source.bad()) {
      return IngestError{"audio source read failure", false};
    }
    const auto got = static_cast<std::size_t>(source.gcount());
    if (got == 0) break;
    AudioChunk chunk;
    chunk.seq = seq;
    chunk.bytes.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(got));
    chunk.emit_time_ms = start + static_cast<int64_t>(seq) * cfg.interval_ms;
    clock.sleep_until(chunk.emit_time_ms);
    emit(std::move(chunk));
    ++seq;
    if (got < cfg.chunk_bytes) break;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Transcript segments and fixtures
// ---------------------------------------------------------------------------

struct TranscriptSegment {
  uint64_t seq = 0;
  int64_t t_start_ms = 0;
  int64_t t_end_ms = 0;
  std::string text;
  bool final = true;
  uint64_t generation = 0;

  bool operator==(const TranscriptSegment&) const = default;
};

inline nlohmann::json to_json(const TranscriptSegment& s) {
  return {{"seq", s.seq},
          {"t_start_ms", s.t_start_ms},
          {"t_end_ms", s.t_end_ms},
          {"text", s.text},
          {"final", s.final}};
}

class FixtureError : public std::runtime_error {
 public:
  FixtureError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses one fixture record. Throws FixtureError naming `line_no`.
inline TranscriptSegment parse_fixture_record(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FixtureError(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FixtureError(line_no, "record is not an object");
  auto require = [&](const char* key, auto check, const char* type) {
    if (!j.contains(key) || !check(j.at(key))) {
      throw FixtureError(line_no, std::string("field '") + key + "' missing or not " + type);
    }
  };
  auto is_int = [](const nlohmann::json& v) { return v.is_number_integer(); };
  require("seq", [](const nlohmann::json& v) { return v.is_number_unsigned(); }, "a non-negative integer");
  require("t_start_ms", is_int, "an integer");
  require("t_end_ms", is_int, "an integer");
  require("text", [](const nlohmann::json& v) { return v.is_string(); }, "a string");
  require("final", [](const nlohmann::json& v) { return v.is_boolean(); }, "a boolean");
  TranscriptSegment s;
  s.seq = j["seq"].get<uint64_t>();
  s.t_start_ms = j["t_start_ms"].get<int64_t>();
  s.t_end_ms = j["t_end_ms"].get<int64_t>();
  s.text = j["text"].get<std::string>();
  s.final = j["final"].get<bool>();
  if (s.t_start_ms < 0 || s.t_start_ms > s.t_end_ms) {
    throw FixtureError(line_no, "t_start_ms must satisfy 0 <= t_start_ms <= t_end_ms");
  }
  return s;
}

/// Loads a line-delimited transcript fixture. Blank lines are skipped;
/// records must be in nondecreasing t_start_ms order.
inline std::vector<TranscriptSegment> load_fixture(std::istream& in) {
  std::vector<TranscriptSegment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto seg = parse_fixture_record(line, line_no);
    if (!out.empty() && seg.t_start_ms < out.back().t_start_ms) {
      throw FixtureError(line_no, "t_start_ms decreases");
    }
    out.push_back(std::move(seg));
  }
  return out;
}

inline std::vector<TranscriptSegment> load_fixture_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture: " + path);
  return load_fixture(in);
}

/// Emits each fixture segment once `clock` reaches its t_start_ms.
inline void replay_fixture(std::span<const TranscriptSegment> segments, Clock& clock,
                           const std::function<void(const TranscriptSegment&)>& emit) {
  for (const auto& seg : segments) {
    clock.sleep_until(seg.t_start_ms);
    emit(seg);
  }
}

// ---------------------------------------------------------------------------
// ASR providers
// ---------------------------------------------------------------------------

struct AsrConfig {
  int64_t interval_ms = 40;
};

struct AsrError {
  enum class Kind { disconnected, malformed };
  Kind kind = Kind::malformed;
  std::string message;
};

using AsrResponse = std::variant<TranscriptSegment, AsrError>;

/// Streaming recognizer contract. receive() is a poll: nullopt means
/// nothing is ready yet. finish() half-closes the audio direction so the
/// provider can flush what it still holds.
class AsrProvider {
 public:
  virtual ~AsrProvider() = default;
  virtual void connect(const AsrConfig& config) = 0;
  virtual void send(const AudioChunk& chunk) = 0;
  virtual void finish() = 0;
  virtual std::optional<AsrResponse> receive() = 0;
  virtual void close() = 0;
};

/// Treats each chunk payload as UTF-8 text and answers with one final
/// segment per chunk.
class EchoAsrProvider final : public AsrProvider {
 public:
  void connect(const AsrConfig& config) override { interval_ms_ = config.interval_ms; }

  void send(const AudioChunk& chunk) override {
    TranscriptSegment s;
    s.seq = chunk.seq;
    s.t_start_ms = chunk.emit_time_ms;
    s.t_end_ms = chunk.emit_time_ms + interval_ms_;
    s.text.assign(chunk.bytes.begin(), chunk.bytes.end());
    s.final = true;
    pending_.push_back(std::move(s));
  }

  void finish() override {}

  std::optional<AsrResponse> receive() override {
    if (pending_.empty()) return std::nullopt;
    AsrResponse r = std::move(pending_.front());
    pending_.pop_front();
    return r;
  }

  void close() override { pending_.clear(); }

 private:
  int64_t interval_ms_ = 40;
  std::deque<TranscriptSegment> pending_;
};

/// One scripted provider output: a segment or an injected fault, released
/// once the audio sent so far reaches `emit_at_ms`.
struct ScriptItem {
  int64_t emit_at_ms = 0;
  AsrResponse response;
};

/// Script file: fixture-shaped records, optionally carrying "emit_at_ms"
/// (defaults to t_end_ms), mixed with fault records of the form
/// {"error": "disconnect" | "malformed", "emit_at_ms": N, "message": "..."}.
inline std::vector<ScriptItem> load_asr_script(std::istream& in) {
  std::vector<ScriptItem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FixtureError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FixtureError(line_no, "record is not an object");
    if (j.contains("error")) {
      const auto kind = j.value("error", std::string());
      AsrError err;
      if (kind == "disconnect") {
        err.kind = AsrError::Kind::disconnected;
      } else if (kind == "malformed") {
        err.kind = AsrError::Kind::malformed;
      } else {
        throw FixtureError(line_no, "unknown error kind '" + kind + "'");
      }
      err.message = j.value("message", kind);
      if (!j.contains("emit_at_ms") || !j["emit_at_ms"].is_number_integer()) {
        throw FixtureError(line_no, "fault record needs integer emit_at_ms");
      }
      out.push_back({j["emit_at_ms"].get<int64_t>(), err});
      continue;
    }
    int64_t emit_at = 0;
    if (j.contains("emit_at_ms")) {
      if (!j["emit_at_ms"].is_number_integer()) throw FixtureError(line_no, "emit_at_ms not an integer");
      emit_at = j["emit_at_ms"].get<int64_t>();
      j.erase("emit_at_ms");
      auto seg = parse_fixture_record(j.dump(), line_no);
      out.push_back({emit_at, seg});
    } else {
      auto seg = parse_fixture_record(line, line_no);
      out.push_back({seg.t_end_ms, seg});
    }
  }
  return out;
}

/// Plays back a script against the audio clock implied by sent chunks.
class ScriptedAsrProvider : public AsrProvider {
 public:
  explicit ScriptedAsrProvider(std::vector<ScriptItem> script) : script_(std::move(script)) {}

  void connect(const AsrConfig& config) override {
    interval_ms_ = config.interval_ms;
    connected_ = true;
  }

  void send(const AudioChunk& chunk) override {
    audio_time_ms_ = std::max(audio_time_ms_, chunk.emit_time_ms + interval_ms_);
  }

  void finish() override { finished_ = true; }

  std::optional<AsrResponse> receive() override {
    if (!connected_ || next_ >= script_.size()) return std::nullopt;
    const auto& item = script_[next_];
    if (!finished_ && item.emit_at_ms > audio_time_ms_) return std::nullopt;
    ++next_;
    return item.response;
  }

  void close() override { connected_ = false; }

 private:
  std::vector<ScriptItem> script_;
  std::size_t next_ = 0;
  int64_t interval_ms_ = 40;
  int64_t audio_time_ms_ = 0;
  bool connected_ = false;
  bool finished_ = false;
};

/// Replays a transcript fixture as a provider: each segment is released
/// once the audio clock reaches its t_start_ms.
class ReplayAsrProvider final : public ScriptedAsrProvider {
 public:
  explicit ReplayAsrProvider(std::span<const TranscriptSegment> fixture)
      : ScriptedAsrProvider(to_script(fixture)) {}

 private:
  static std::vector<ScriptItem> to_script(std::span<const TranscriptSegment> fixture) {
    std::vector<ScriptItem> out;
    out.reserve(fixture.size());
    for (const auto& s : fixture) out.push_back({s.t_start_ms, s});
    return out;
  }
};

struct TranscribeCallbacks {
  std::function<void(const TranscriptSegment&)> on_segment;
  std::function<void(const std::string&)> on_warning;
  std::function<void(const IngestError&)> on_error;
  /// Provisional seqs abandoned because the stream ended in error.
  std::function<void(uint64_t seq)> on_dropped;
  /// Generation stamped onto emitted segments.
  std::function<uint64_t()> generation;
};

/// Drives an AsrProvider and enforces the segment contract on its output:
/// emission order is nondecreasing in t_start_ms, finals are never revised,
/// and every provisional segment is resolved when the stream ends.
class Transcriber {
 public:
  Transcriber(AsrProvider& provider, TranscribeCallbacks callbacks, const AsrConfig& config = {})
      : provider_(provider), cb_(std::move(callbacks)) {
    provider_.connect(config);
  }

  /// Returns false once the stream has terminated.
  bool feed(const AudioChunk& chunk) {
    if (done_) return false;
    provider_.send(chunk);
    drain();
    return !done_;
  }

  /// End of audio: flush the provider, then finalize open provisionals.
  void finish() {
    if (done_) return;
    provider_.finish();
    drain();
    if (done_) return;
    for (auto& [seq, seg] : open_) {
      seg.final = true;
      emit(seg);
    }
    open_.clear();
    provider_.close();
    done_ = true;
  }

  bool done() const { return done_; }

 private:
  void drain() {
    while (!done_) {
      auto r = provider_.receive();
      if (!r) return;
      if (auto* err = std::get_if<AsrError>(&*r)) {
        if (err->kind == AsrError::Kind::disconnected) {
          terminate(IngestError{"provider disconnected: " + err->message, true});
          return;
        }
        warn("malformed provider response discarded: " + err->message);
        continue;
      }
      accept(std::get<TranscriptSegment>(std::move(*r)));
    }
  }

  void accept(TranscriptSegment seg) {
    if (seg.t_start_ms > seg.t_end_ms) {
      warn("segment " + std::to_string(seg.seq) + " discarded: t_start_ms > t_end_ms");
      return;
    }
    if (finalized_.count(seg.seq) != 0) {
      warn("segment " + std::to_string(seg.seq) + " discarded: revision of a final segment");
      return;
    }
    const bool revision = open_.count(seg.seq) != 0;
    if (!revision && seg.t_start_ms < last_start_) {
      warn("segment " + std::to_string(seg.seq) + " discarded: out of order");
      return;
    }
    last_start_ = std::max(last_start_, seg.t_start_ms);
    if (seg.final) {
      open_.erase(seg.seq);
      finalized_.insert(seg.seq);
    } else {
      open_[seg.seq] = seg;
    }
    emit(seg);
  }

  void emit(TranscriptSegment seg) {
    if (cb_.generation) seg.generation = cb_.generation();
    if (cb_.on_segment) cb_.on_segment(seg);
  }

  void warn(const std::string& msg) {
    if (cb_.on_warning) cb_.on_warning(msg);
  }

  void terminate(const IngestError& err) {
    done_ = true;
    for (const auto& [seq, seg] : open_) {
      if (cb_.on_dropped) cb_.on_dropped(seq);
    }
    open_.clear();
    provider_.close();
    if (cb_.on_error) cb_.on_error(err);
  }

  AsrProvider& provider_;
  TranscribeCallbacks cb_;
  std::map<uint64_t, TranscriptSegment> open_;
  std::set<uint64_t> finalized_;
  int64_t last_start_ = INT64_MIN;
  bool done_ = false;
};

/// Runs a complete chunk sequence through `provider`.
inline void transcribe(std::span<const AudioChunk> chunks, AsrProvider& provider,
                       TranscribeCallbacks callbacks, const AsrConfig& config = {}) {
  Transcriber t(provider, std::move(callbacks), config);
  for (const auto& c : chunks) {
    if (!t.feed(c)) return;
  }
  t.finish();
}

// ---------------------------------------------------------------------------
// Bounded handoff queue
// ---------------------------------------------------------------------------

/// Blocking MPSC queue; push() waits while full rather than dropping.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Returns false if the queue was closed.
  bool push(T value) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  /// Blocks until an item arrives or the queue is closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return v;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<T> items_;
  std::size_t capacity_;
  bool closed_ = false;
};

}  // namespace livecap
