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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "livecap/clock.hpp"
#include "livecap/engine.hpp"
#include "livecap/ingest.hpp"
#include "livecap/session.hpp"
#include "livecap/summarize.hpp"

namespace livecap {

/// Everything needed to run one session headlessly.
struct RunConfig {
  std::string fixture;     // transcript fixture (JSONL)
  std::string audio;       // raw audio file, used when no fixture is given
  std::string asr = "echo";  // echo | script:PATH | replay:FIXTURE
  std::string llm = "mock";  // mock | cassette:PATH
  std::string record_cassette;
  std::string keyword_table;
  std::size_t chunk_bytes = 640;
  int64_t interval_ms = 40;
  int64_t tick_ms = kDefaultTickMs;
  int64_t window_ms = kDefaultWindowMs;
  std::size_t condensed_limit = 50;
  int rsvp_rate = rsvp::kDefaultRate;
  std::string clock = "virtual";  // virtual | real
  std::string output;             // event log; empty = stdout
  std::string language = "zh";
  std::string history_dir;
  std::string session_id;
  std::optional<int64_t> duration_ms;
  int64_t llm_deadline_ms = 20000;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate(const RunConfig& c) {
  if (c.fixture.empty() && c.audio.empty()) throw ConfigError("a --fixture or --audio source is required");
  if (!c.fixture.empty() && !c.audio.empty()) throw ConfigError("--fixture and --audio are exclusive");
  if (c.chunk_bytes == 0) throw ConfigError("--chunk-bytes must be positive");
  if (c.interval_ms <= 0) throw ConfigError("--interval-ms must be positive");
  if (c.tick_ms <= 0) throw ConfigError("--tick-ms must be positive");
  if (c.window_ms <= 0) throw ConfigError("--window-ms must be positive");
  if (c.condensed_limit == 0) throw ConfigError("--condensed-limit must be positive");
  if (c.rsvp_rate <= 0) throw ConfigError("--rsvp-rate must be positive");
  if (c.clock != "virtual" && c.clock != "real") throw ConfigError("--clock must be virtual or real");
  if (c.language != "zh" && c.language != "en") throw ConfigError("--language must be zh or en");
  if (c.llm != "mock" && c.llm.rfind("cassette:", 0) != 0) throw ConfigError("--llm must be mock or cassette:PATH");
  if (c.asr != "echo" && c.asr.rfind("script:", 0) != 0 && c.asr.rfind("replay:", 0) != 0) {
    throw ConfigError("--asr must be echo, script:PATH or replay:FIXTURE");
  }
  if (c.duration_ms && *c.duration_ms < 0) throw ConfigError("--duration-ms must be non-negative");
}

/// LLM provider stack for a RunConfig, with optional recording.
class ProviderSet {
 public:
  explicit ProviderSet(const RunConfig& c) {
    if (!c.keyword_table.empty()) table_ = summarize::load_keyword_table(c.keyword_table);
    if (c.llm == "mock") {
      base_ = std::make_unique<summarize::MockLlmProvider>(table_, c.condensed_limit);
    } else {
      base_ = std::make_unique<summarize::CassetteLlmProvider>(
          summarize::CassetteLlmProvider::load(c.llm.substr(std::string("cassette:").size())));
    }
    if (!c.record_cassette.empty()) {
      recorder_ = std::make_unique<summarize::RecordingLlmProvider>(*base_);
      record_path_ = c.record_cassette;
    }
  }

  summarize::LlmProvider& provider() { return recorder_ ? *recorder_ : *base_; }
  const summarize::KeywordTable& table() const { return table_; }

  void save_recording() const {
    if (recorder_) recorder_->save(record_path_);
  }

 private:
  summarize::KeywordTable table_ = summarize::default_keyword_table();
  std::unique_ptr<summarize::LlmProvider> base_;
  std::unique_ptr<summarize::RecordingLlmProvider> recorder_;
  std::string record_path_;
};

inline std::unique_ptr<AsrProvider> make_asr(const std::string& spec) {
  if (spec == "echo") return std::make_unique<EchoAsrProvider>();
  if (spec.rfind("script:", 0) == 0) {
    const auto path = spec.substr(7);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ASR script: " + path);
    return std::make_unique<ScriptedAsrProvider>(load_asr_script(in));
  }
  if (spec.rfind("replay:", 0) == 0) {
    const auto segs = load_fixture_file(spec.substr(7));
    return std::make_unique<ReplayAsrProvider>(segs);
  }
  throw std::invalid_argument("unknown ASR provider " + spec);
}

inline EngineConfig engine_config(const RunConfig& c, const summarize::KeywordTable* table) {
  EngineConfig e;
  e.session_id = c.session_id.empty() ? "session" : c.session_id;
  e.tick_ms = c.tick_ms;
  e.window_ms = c.window_ms;
  e.condensed_limit = c.condensed_limit;
  e.rsvp_rate = c.rsvp_rate;
  e.llm_deadline_ms = c.llm_deadline_ms;
  e.language = summarize::language_from_string(c.language);
  e.fallback_table = table;
  return e;
}

/// Clock handed to ingest sources under virtual time. Sleeping on it runs
/// the engine through every deadline up to the wake-up time, so ticks,
/// ingest and RSVP interleave exactly as they would in real time.
class DrivenClock final : public Clock {
 public:
  DrivenClock(VirtualClock& clock, Engine& engine) : clock_(clock), engine_(engine) {}

  int64_t now_ms() const override { return clock_.now_ms(); }
  ClockKind kind() const override { return ClockKind::virtual_time; }

  void sleep_until(int64_t t) override {
    while (true) {
      const auto d = engine_.next_deadline();
      if (!d || *d > t) break;
      clock_.advance_to(*d);
      engine_.advance();
    }
    clock_.advance_to(t);
    engine_.advance();
  }

  /// Runs until nothing is scheduled (capture must be stopped first).
  void drain() {
    while (auto d = engine_.next_deadline()) {
      clock_.advance_to(*d);
      engine_.advance();
    }
  }

 private:
  VirtualClock& clock_;
  Engine& engine_;
};

/// Background loop servicing engine deadlines on a real clock.
class LiveDriver {
 public:
  LiveDriver(Engine& engine, Clock& clock) : engine_(engine), clock_(clock) {}
  LiveDriver(const LiveDriver&) = delete;
  LiveDriver& operator=(const LiveDriver&) = delete;
  ~LiveDriver() { stop(); }

  void start() {
    if (thread_.joinable()) return;
    stop_ = false;
    thread_ = std::thread([this] { run(); });
  }

  void stop() {
    stop_ = true;
    if (thread_.joinable()) thread_.join();
  }

 private:
  void run() {
    uint64_t seen = 0;
    while (!stop_) {
      engine_.advance();
      const auto d = engine_.next_deadline();
      int64_t wait = 100;
      if (d) wait = std::clamp<int64_t>(*d - clock_.now_ms(), 0, 100);
      if (wait > 0) engine_.wait_for_change(seen, std::chrono::milliseconds(wait));
    }
  }

  Engine& engine_;
  Clock& clock_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

/// Clock whose sleeps abort once stop() is called; ingest sources sleep on
/// it so a capture can be stopped mid-stream. Time is relative to `origin`.
class InterruptibleClock final : public Clock {
 public:
  InterruptibleClock(Clock& base, int64_t origin) : base_(base), origin_(origin) {}

  int64_t now_ms() const override { return base_.now_ms() - origin_; }
  ClockKind kind() const override { return base_.kind(); }

  void sleep_until(int64_t t) override {
    std::unique_lock lock(mu_);
    while (!stopped_) {
      const auto remaining = t - now_ms();
      if (remaining <= 0) return;
      cv_.wait_for(lock, std::chrono::milliseconds(std::min<int64_t>(remaining, 50)));
    }
    throw Stopped();
  }

  void stop() {
    std::lock_guard lock(mu_);
    stopped_ = true;
    cv_.notify_all();
  }

  struct Stopped {};

 private:
  Clock& base_;
  int64_t origin_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopped_ = false;
};

/// Feeds the configured source into an engine. Fixture segments are
/// restamped with the engine's current generation and shifted to the
/// capture origin; audio goes through the chunker and an ASR provider.
inline void run_source(const RunConfig& c, Engine& engine, Clock& clock, int64_t offset_ms = 0) {
  if (!c.fixture.empty()) {
    const auto segs = load_fixture_file(c.fixture);
    replay_fixture(segs, clock, [&](const TranscriptSegment& s) {
      auto copy = s;
      copy.t_start_ms += offset_ms;
      copy.t_end_ms += offset_ms;
      copy.generation = engine.generation();
      engine.ingest_segment(copy);
    });
    return;
  }
  std::ifstream audio(c.audio, std::ios::binary);
  if (!audio) {
    engine.ingest_error({"cannot open audio source " + c.audio, false});
    return;
  }
  auto asr = make_asr(c.asr);
  AsrConfig ac;
  ac.interval_ms = c.interval_ms;
  auto cb = engine.transcribe_callbacks();
  if (offset_ms != 0) {
    auto inner = cb.on_segment;
    cb.on_segment = [inner, offset_ms](const TranscriptSegment& s) {
      auto copy = s;
      copy.t_start_ms += offset_ms;
      copy.t_end_ms += offset_ms;
      inner(copy);
    };
  }
  Transcriber transcriber(*asr, cb, ac);
  const auto err = chunk_audio(audio, {c.chunk_bytes, c.interval_ms}, clock,
                               [&](AudioChunk chunk) { transcriber.feed(chunk); });
  if (err) {
    engine.ingest_error(*err);
    return;
  }
  transcriber.finish();
}

struct ReplayResult {
  std::vector<std::string> lines;
  std::size_t condensed = 0;
  std::size_t framework = 0;
};

/// Runs a full session and returns the event log as wire messages. Under
/// the virtual clock the session starts at t=0, the wall clock is derived
/// from virtual time, and the log is deterministic.
inline ReplayResult run_replay(const RunConfig& c) {
  validate(c);
  ProviderSet providers(c);
  std::unique_ptr<HistoryStore> store;
  if (!c.history_dir.empty()) store = std::make_unique<HistoryStore>(c.history_dir);
  auto cfg = engine_config(c, &providers.table());
  if (c.session_id.empty()) {
    const auto& src = c.fixture.empty() ? c.audio : c.fixture;
    cfg.session_id = std::filesystem::path(src).stem().string();
  }

  ReplayResult result;
  auto collect = [&](Subscription& sub) {
    for (auto& e : sub.drain()) {
      if (e.kind == EventKind::condensed) ++result.condensed;
      if (e.kind == EventKind::framework) ++result.framework;
      result.lines.push_back(encode_event(e));
    }
  };

  if (c.clock == "virtual") {
    VirtualClock vclock(0, false);
    Engine engine(cfg, vclock, providers.provider(), store.get(), [&vclock] {
      return iso8601_utc(std::chrono::system_clock::time_point(std::chrono::milliseconds(vclock.now_ms())));
    });
    auto sub = engine.subscribe(std::nullopt, 0);
    DrivenClock driven(vclock, engine);
    engine.start_capture();
    run_source(c, engine, driven);
    int64_t end = driven.now_ms();
    if (c.duration_ms) {
      end = *c.duration_ms;
    } else if (!c.fixture.empty()) {
      for (const auto& s : load_fixture_file(c.fixture)) end = std::max(end, s.t_end_ms);
    }
    driven.sleep_until(end);
    engine.stop_capture();
    driven.drain();
    collect(*sub);
  } else {
    RealClock clock;
    cfg.threaded = true;
    Engine engine(cfg, clock, providers.provider(), store.get());
    auto sub = engine.subscribe(std::nullopt, 0);
    LiveDriver driver(engine, clock);
    driver.start();
    engine.start_capture();
    run_source(c, engine, clock);
    if (c.duration_ms) clock.sleep_until(*c.duration_ms);
    engine.stop_capture();
    engine.wait_idle();
    while (engine.next_deadline()) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    driver.stop();
    engine.shutdown();
    collect(*sub);
  }
  providers.save_recording();
  return result;
}

inline void write_log(const ReplayResult& r, std::ostream& out) {
  for (const auto& l : r.lines) out << l << '\n';
}

}  // namespace livecap
