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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "livecap/clock.hpp"
#include "livecap/framework.hpp"
#include "livecap/ingest.hpp"
#include "livecap/protocol.hpp"
#include "livecap/rsvp.hpp"
#include "livecap/session.hpp"
#include "livecap/summarize.hpp"

namespace livecap {

/// Outbound queue of one connection. Events get their per-connection seq
/// here, so every subscriber sees 1, 2, 3, ... regardless of when it joined.
/// A bounded queue that fills up closes itself; the slow client must
/// reconnect and resync.
class Subscription {
 public:
  /// capacity 0 means unbounded.
  explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

  std::optional<SessionEvent> try_pop() {
    std::lock_guard lock(mu_);
    return pop_locked();
  }

  /// Waits up to `timeout` for an event. nullopt on timeout or once closed
  /// and drained.
  std::optional<SessionEvent> pop_wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
    return pop_locked();
  }

  std::vector<SessionEvent> drain() {
    std::lock_guard lock(mu_);
    std::vector<SessionEvent> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }

  bool overflowed() const {
    std::lock_guard lock(mu_);
    return overflowed_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

  /// Called after every push and on close. Runs on the engine's writer
  /// path, so it must not block or call back into the engine.
  void set_notify(std::function<void()> fn) {
    std::lock_guard lock(mu_);
    notify_ = std::move(fn);
  }

  void close() {
    std::function<void()> fn;
    {
      std::lock_guard lock(mu_);
      closed_ = true;
      fn = notify_;
    }
    cv_.notify_all();
    if (fn) fn();
  }

  /// Returns false when the subscription is (now) closed.
  bool push(SessionEvent e) {
    std::function<void()> fn;
    {
      std::lock_guard lock(mu_);
      if (closed_) return false;
      if (capacity_ != 0 && items_.size() >= capacity_) {
        overflowed_ = true;
        closed_ = true;
      } else {
        e.seq = ++last_seq_;
        items_.push_back(std::move(e));
      }
      fn = notify_;
    }
    cv_.notify_all();
    if (fn) fn();
    return !closed();
  }

 private:
  std::optional<SessionEvent> pop_locked() {
    if (items_.empty()) return std::nullopt;
    auto e = std::move(items_.front());
    items_.pop_front();
    return e;
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<SessionEvent> items_;
  std::size_t capacity_;
  uint64_t last_seq_ = 0;
  bool closed_ = false;
  bool overflowed_ = false;
  std::function<void()> notify_;
};

/// Single worker thread running posted jobs in order.
class SerialLane {
 public:
  SerialLane() = default;
  SerialLane(const SerialLane&) = delete;
  SerialLane& operator=(const SerialLane&) = delete;
  ~SerialLane() { stop(); }

  void post(std::function<void()> job) {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    if (!worker_.joinable()) worker_ = std::thread([this] { run(); });
    jobs_.push_back(std::move(job));
    cv_.notify_all();
  }

  void wait_idle() {
    std::unique_lock lock(mu_);
    idle_cv_.wait(lock, [&] { return jobs_.empty() && !busy_; });
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
      cv_.notify_all();
    }
    if (worker_.joinable()) worker_.join();
  }

 private:
  void run() {
    std::unique_lock lock(mu_);
    while (true) {
      cv_.wait(lock, [&] { return stopping_ || !jobs_.empty(); });
      if (jobs_.empty()) return;
      auto job = std::move(jobs_.front());
      jobs_.pop_front();
      busy_ = true;
      lock.unlock();
      job();
      lock.lock();
      busy_ = false;
      if (jobs_.empty()) idle_cv_.notify_all();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_, idle_cv_;
  std::deque<std::function<void()>> jobs_;
  std::thread worker_;
  bool busy_ = false;
  bool stopping_ = false;
};

struct EngineConfig {
  std::string session_id = "session";
  int64_t tick_ms = kDefaultTickMs;
  int64_t window_ms = kDefaultWindowMs;
  std::size_t condensed_limit = 50;
  int rsvp_rate = rsvp::kDefaultRate;
  int64_t llm_deadline_ms = 20000;
  summarize::PromptLanguage language = summarize::PromptLanguage::zh;
  const summarize::KeywordTable* fallback_table = nullptr;
  /// Events kept for reconnecting clients.
  std::size_t backlog = 4096;
  /// Per-connection queue bound; 0 = unbounded.
  std::size_t subscriber_queue = 8192;
  /// Run LLM jobs on worker lanes instead of inline on the caller.
  bool threaded = false;
  bool autosave = true;
};

inline constexpr int kMaxRsvpRate = 6000;

/// The session runtime. Every mutation goes through one mutex, which is the
/// serialized writer: segments, ticks, commands and job completions. LLM
/// jobs run outside it (inline after the lock is released, or on one worker
/// lane per job kind) and re-enter with their generation tag, so a result
/// produced before a clear is discarded on arrival.
class Engine {
 public:
  Engine(EngineConfig cfg, Clock& clock, summarize::LlmProvider& provider, HistoryStore* store = nullptr,
         std::function<std::string()> wall = {})
      : cfg_(std::move(cfg)),
        clock_(clock),
        provider_(provider),
        store_(store),
        wall_(wall ? std::move(wall) : std::function<std::string()>(wall_now)),
        player_(cfg_.rsvp_rate) {
    if (cfg_.tick_ms <= 0 || cfg_.window_ms <= 0) throw std::invalid_argument("tick and window must be positive");
    if (cfg_.condensed_limit == 0) throw std::invalid_argument("condensed limit must be positive");
    state_.session_id = cfg_.session_id;
    state_.rsvp_rate = cfg_.rsvp_rate;
    if (store_) appearance_ = store_->load_appearance();
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  ~Engine() {
    condense_lane_.stop();
    framework_lane_.stop();
  }

  // -- subscribers ---------------------------------------------------------

  /// New connection. The first queued event is a state snapshot carrying
  /// the full content and a "cursor": the broadcast position of the next
  /// event that follows it. A client that saw events up to position N may
  /// pass resume = N + 1 to get the missed events replayed after the
  /// snapshot, provided they are still retained and none precede the last
  /// clear; otherwise it gets the snapshot alone.
  std::shared_ptr<Subscription> subscribe(std::optional<uint64_t> resume = std::nullopt,
                                          std::optional<std::size_t> capacity = std::nullopt) {
    std::lock_guard lock(mu_);
    auto sub = std::make_shared<Subscription>(capacity.value_or(cfg_.subscriber_queue));
    const bool resumed = resume && *resume >= backlog_start_ && *resume >= last_clear_index_ &&
                         *resume <= next_index_;
    const uint64_t from = resumed ? *resume : next_index_;
    auto payload = state_payload_locked(true);
    payload["cursor"] = from;
    payload["resumed"] = resumed;
    sub->push(make_event_locked(EventKind::state, std::move(payload)));
    if (resumed) {
      for (uint64_t i = from; i < next_index_; ++i) sub->push(backlog_[i - backlog_start_]);
    }
    subs_.push_back(sub);
    return sub;
  }

  /// Synchronous tap on every broadcast event, invoked under the writer
  /// lock. Must not call back into the engine.
  void set_observer(std::function<void(const SessionEvent&)> fn) {
    std::lock_guard lock(mu_);
    observer_ = std::move(fn);
  }

  /// Invoked (outside the writer lock) whenever capture starts or stops.
  void set_capture_listener(std::function<void(bool capturing)> fn) {
    std::lock_guard lock(mu_);
    capture_listener_ = std::move(fn);
  }

  // -- commands ------------------------------------------------------------

  /// Applies one command. Exactly one ack (a state or history event) or
  /// error event carrying the command id is broadcast for it.
  void handle_command(const SessionCommand& cmd) {
    {
      std::lock_guard lock(mu_);
      apply_command_locked(cmd);
    }
    flush();
  }

  void start_capture() { handle_internal(CommandKind::start_capture); }
  void stop_capture() { handle_internal(CommandKind::stop_capture); }
  void clear() { handle_internal(CommandKind::clear); }

  // -- ingest --------------------------------------------------------------

  void ingest_segment(const TranscriptSegment& seg) {
    {
      std::lock_guard lock(mu_);
      const auto r = append_segment(state_, seg);
      if (r == AppendResult::appended) {
        emit_locked(EventKind::segment, to_json(seg));
      } else if (r == AppendResult::revised) {
        emit_locked(EventKind::segment_revised, to_json(seg));
      }
      pump_rsvp_locked(clock_.now_ms());
    }
    flush();
  }

  /// A provisional the recognizer abandoned.
  void ingest_dropped(uint64_t seq, uint64_t generation) {
    std::lock_guard lock(mu_);
    if (generation != state_.generation) return;
    if (drop_provisional(state_, seq)) {
      emit_locked(EventKind::segment_revised, {{"seq", seq}, {"dropped", true}});
    }
  }

  void ingest_error(const IngestError& err) {
    std::lock_guard lock(mu_);
    auto p = error_payload(nullptr, "ingest_failed", err.message, "error");
    p["retriable"] = err.retriable;
    emit_locked(EventKind::error, std::move(p));
  }

  void ingest_warning(const std::string& message) {
    std::lock_guard lock(mu_);
    emit_locked(EventKind::error, error_payload(nullptr, "ingest_warning", message, "warning"));
  }

  /// Callbacks wiring a Transcriber into this engine.
  TranscribeCallbacks transcribe_callbacks() {
    TranscribeCallbacks cb;
    cb.on_segment = [this](const TranscriptSegment& s) { ingest_segment(s); };
    cb.on_warning = [this](const std::string& m) { ingest_warning(m); };
    cb.on_error = [this](const IngestError& e) { ingest_error(e); };
    cb.generation = [this] { return generation(); };
    // Dropped provisionals belong to the generation current when the
    // stream failed.
    cb.on_dropped = [this](uint64_t seq) { ingest_dropped(seq, generation()); };
    return cb;
  }

  // -- time ----------------------------------------------------------------

  /// Fires every tick and releases every RSVP token due at the clock's
  /// current time. Inline jobs complete before this returns.
  void advance() {
    while (true) {
      {
        std::lock_guard lock(mu_);
        step_locked(clock_.now_ms());
      }
      flush();
      std::lock_guard lock(mu_);
      const auto d = next_deadline_locked();
      if (!d || *d > clock_.now_ms()) return;
    }
  }

  /// Earliest time at which advance() has work: a tick or an RSVP onset.
  std::optional<int64_t> next_deadline() const {
    std::lock_guard lock(mu_);
    return next_deadline_locked();
  }

  /// Blocks until some event has been broadcast since `seen` (updated on
  /// return) or the timeout passes.
  bool wait_for_change(uint64_t& seen, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    const bool changed = changed_cv_.wait_for(lock, timeout, [&] { return change_counter_ != seen; });
    seen = change_counter_;
    return changed;
  }

  /// Waits for worker lanes to drain (threaded mode only).
  void wait_idle() {
    if (!cfg_.threaded) return;
    for (int i = 0; i < 4; ++i) {
      condense_lane_.wait_idle();
      framework_lane_.wait_idle();
    }
  }

  /// Final save of whatever content is held, then stop the workers.
  void shutdown() {
    {
      std::lock_guard lock(mu_);
      autosave_locked("shutdown");
    }
    condense_lane_.stop();
    framework_lane_.stop();
  }

  // -- readers -------------------------------------------------------------

  uint64_t generation() const {
    std::lock_guard lock(mu_);
    return state_.generation;
  }

  SessionState snapshot() const {
    std::lock_guard lock(mu_);
    return state_;
  }

  nlohmann::json appearance() const {
    std::lock_guard lock(mu_);
    return appearance_;
  }

  bool rsvp_paused() const {
    std::lock_guard lock(mu_);
    return player_.paused();
  }

  uint64_t stale_results() const {
    std::lock_guard lock(mu_);
    return stale_results_;
  }

  /// Broadcast position of the next event.
  uint64_t cursor() const {
    std::lock_guard lock(mu_);
    return next_index_;
  }

  const EngineConfig& config() const { return cfg_; }

  int64_t now_ms() const { return clock_.now_ms(); }

  /// Error event addressed to one connection only (not broadcast), e.g.
  /// the final message before closing on a protocol violation.
  SessionEvent connection_error(std::string_view code, const std::string& message) const {
    std::lock_guard lock(mu_);
    return make_event_locked(EventKind::error, error_payload(nullptr, code, message, "error"));
  }

 private:
  enum class Lane { condense, framework };
  struct Job {
    Lane lane;
    std::function<void()> fn;
  };

  // -- writer-side helpers (mu_ held) ---------------------------------------

  SessionEvent make_event_locked(EventKind kind, nlohmann::json payload) const {
    SessionEvent e;
    e.generation = state_.generation;
    e.kind = kind;
    e.at_ms = clock_.now_ms();
    e.payload = std::move(payload);
    return e;
  }

  void emit_locked(EventKind kind, nlohmann::json payload) {
    auto e = make_event_locked(kind, std::move(payload));
    backlog_.push_back(e);
    ++next_index_;
    while (backlog_.size() > cfg_.backlog) {
      backlog_.pop_front();
      ++backlog_start_;
    }
    std::vector<std::weak_ptr<Subscription>> live;
    live.reserve(subs_.size());
    for (auto& w : subs_) {
      if (auto s = w.lock()) {
        if (s->push(e)) live.push_back(w);
      }
    }
    subs_.swap(live);
    if (observer_) observer_(e);
    ++change_counter_;
    changed_cv_.notify_all();
  }

  static nlohmann::json error_payload(const nlohmann::json& command_id, std::string_view code,
                                      const std::string& message, std::string_view severity) {
    return {{"command_id", command_id}, {"code", code}, {"message", message}, {"severity", severity}};
  }

  nlohmann::json state_payload_locked(bool with_content) const {
    nlohmann::json p = {
        {"session_id", state_.session_id},
        {"started_at", state_.started_at},
        {"capturing", state_.capturing},
        {"mode", to_string(state_.mode)},
        {"generation", state_.generation},
        {"tick_index", state_.tick_index},
        {"capture_origin_ms", state_.capture_origin_ms},
        {"rsvp_rate", state_.rsvp_rate},
        {"rsvp_paused", player_.paused()},
        {"appearance", appearance_},
        {"counts",
         {{"segments", state_.buffer.size()},
          {"condensed", state_.condensed_log.size()},
          {"framework_snapshots", state_.framework_snapshots.size()}}},
        {"stale_segments", state_.stale_segments},
        {"stale_results", stale_results_},
        {"history_id", state_.history_id ? nlohmann::json(*state_.history_id) : nlohmann::json()},
    };
    if (with_content) {
      nlohmann::json segs = nlohmann::json::array(), cond = nlohmann::json::array();
      for (const auto& s : state_.buffer) segs.push_back(to_json(s));
      for (const auto& c : state_.condensed_log) cond.push_back(summarize::to_json(c));
      auto fw = framework::to_json(state_.framework_current);
      fw["text"] = framework::render(state_.framework_current);
      p["content"] = {{"segments", segs}, {"condensed", cond}, {"framework", fw}};
    }
    return p;
  }

  void ack_locked(const SessionCommand& cmd) {
    auto p = state_payload_locked(false);
    p["command_id"] = cmd.id;
    p["command"] = cmd.kind_name;
    emit_locked(EventKind::state, std::move(p));
  }

  void reject_locked(const SessionCommand& cmd, std::string_view code, const std::string& message) {
    emit_locked(EventKind::error, error_payload(cmd.id, code, message, "error"));
  }

  bool has_content_locked() const {
    return !state_.buffer.empty() || !state_.condensed_log.empty() || !state_.framework_snapshots.empty();
  }

  void autosave_locked(std::string_view reason) {
    if (!store_ || !cfg_.autosave || !has_content_locked()) return;
    try {
      const auto id = save_history(state_, *store_);
      emit_locked(EventKind::history, {{"action", "saved"}, {"id", id}, {"reason", reason}});
    } catch (const std::exception& e) {
      emit_locked(EventKind::error, error_payload(nullptr, "history_write_failed", e.what(), "error"));
    }
  }

  void notify_capture_locked() {
    if (!capture_listener_) return;
    notices_.push_back([fn = capture_listener_, on = state_.capturing] { fn(on); });
  }

  void apply_command_locked(const SessionCommand& cmd) {
    if (!cmd.kind) {
      reject_locked(cmd, "unknown_command", "unknown command kind '" + cmd.kind_name + "'");
      return;
    }
    auto only = [&](std::initializer_list<std::string_view> allowed) {
      for (const auto& [key, value] : cmd.args.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
          reject_locked(cmd, "bad_args", "unexpected argument '" + key + "'");
          return false;
        }
      }
      return true;
    };
    const int64_t now = clock_.now_ms();
    switch (*cmd.kind) {
      case CommandKind::start_capture:
        if (!only({})) return;
        if (state_.capturing) return reject_locked(cmd, "invalid_state", "capture already running");
        state_.capturing = true;
        state_.capture_origin_ms = now;
        state_.tick_index = 0;
        if (state_.started_at.empty()) state_.started_at = wall_();
        ack_locked(cmd);
        notify_capture_locked();
        return;
      case CommandKind::stop_capture:
        if (!only({})) return;
        if (!state_.capturing) return reject_locked(cmd, "invalid_state", "capture is not running");
        state_.capturing = false;
        autosave_locked("stop_capture");
        ack_locked(cmd);
        notify_capture_locked();
        return;
      case CommandKind::clear:
        if (!only({})) return;
        autosave_locked("clear");
        livecap::clear(state_, now);
        state_.started_at = wall_();
        player_.clear();
        outstanding_.clear();
        ready_.clear();
        ack_locked(cmd);
        last_clear_index_ = next_index_ - 1;
        return;
      case CommandKind::set_mode: {
        if (!only({"mode"})) return;
        const auto& m = cmd.args.value("mode", nlohmann::json());
        const auto mode = m.is_string() ? mode_from_string(m.get<std::string>()) : std::nullopt;
        if (!mode) return reject_locked(cmd, "bad_args", "mode must be one of raw, condensed, framework");
        state_.mode = *mode;
        ack_locked(cmd);
        return;
      }
      case CommandKind::set_rsvp_rate: {
        if (!only({"rate"})) return;
        const auto& r = cmd.args.value("rate", nlohmann::json());
        if (!r.is_number_integer() || r.get<int64_t>() <= 0 || r.get<int64_t>() > kMaxRsvpRate) {
          return reject_locked(cmd, "bad_args",
                               "rate must be an integer in 1.." + std::to_string(kMaxRsvpRate));
        }
        const int rate = r.get<int>();
        player_.set_rate(rate, now);
        state_.rsvp_rate = rate;
        ack_locked(cmd);
        return;
      }
      case CommandKind::set_appearance: {
        if (cmd.args.empty()) return reject_locked(cmd, "bad_args", "no appearance keys given");
        for (const auto& [key, value] : cmd.args.items()) {
          if (value.is_object() || value.is_array()) {
            return reject_locked(cmd, "bad_args", "appearance value for '" + key + "' must be a scalar");
          }
        }
        for (const auto& [key, value] : cmd.args.items()) {
          if (value.is_null()) {
            appearance_.erase(key);
          } else {
            appearance_[key] = value;
          }
        }
        if (store_) {
          try {
            store_->save_appearance(appearance_);
          } catch (const std::exception& e) {
            emit_locked(EventKind::error,
                        error_payload(nullptr, "appearance_write_failed", e.what(), "warning"));
          }
        }
        ack_locked(cmd);
        return;
      }
      case CommandKind::list_history: {
        if (!only({})) return;
        if (!store_) return reject_locked(cmd, "unavailable", "no history store configured");
        nlohmann::json items = nlohmann::json::array();
        try {
          for (const auto& s : store_->list()) {
            items.push_back({{"id", s.id},
                             {"session_id", s.session_id},
                             {"started_at", s.started_at},
                             {"segments", s.segments},
                             {"condensed", s.condensed},
                             {"framework_snapshots", s.framework_snapshots}});
          }
        } catch (const std::exception& e) {
          return reject_locked(cmd, "history_read_failed", e.what());
        }
        emit_locked(EventKind::history, {{"command_id", cmd.id}, {"action", "list"}, {"items", items}});
        return;
      }
      case CommandKind::load_history: {
        if (!only({"id"})) return;
        if (!store_) return reject_locked(cmd, "unavailable", "no history store configured");
        const auto& id = cmd.args.value("id", nlohmann::json());
        if (!id.is_string()) return reject_locked(cmd, "bad_args", "id must be a string");
        try {
          const auto rec = store_->load(id.get<std::string>());
          emit_locked(EventKind::history,
                      {{"command_id", cmd.id}, {"action", "load"}, {"record", history_to_json(rec)}});
        } catch (const std::exception& e) {
          reject_locked(cmd, "not_found", e.what());
        }
        return;
      }
      case CommandKind::pause_rsvp:
        if (!only({})) return;
        if (player_.paused()) return reject_locked(cmd, "invalid_state", "rsvp already paused");
        player_.pause(now);
        ack_locked(cmd);
        return;
      case CommandKind::resume_rsvp:
        if (!only({})) return;
        if (!player_.paused()) return reject_locked(cmd, "invalid_state", "rsvp is not paused");
        player_.resume(now);
        ack_locked(cmd);
        pump_rsvp_locked(now);
        return;
    }
  }

  void handle_internal(CommandKind kind) {
    handle_command(make_command(nullptr, kind));
  }

  static nlohmann::json history_to_json(const HistoryRecord& rec) {
    nlohmann::json segs = nlohmann::json::array(), cond = nlohmann::json::array(),
                   fws = nlohmann::json::array();
    for (const auto& s : rec.segments) segs.push_back(to_json(s));
    for (const auto& c : rec.condensed) cond.push_back(summarize::to_json(c));
    for (const auto& f : rec.framework_snapshots) {
      auto j = framework::to_json(f);
      j["text"] = framework::render(f);
      fws.push_back(std::move(j));
    }
    return {{"id", rec.id},
            {"session_id", rec.session_id},
            {"started_at", rec.started_at},
            {"generation", rec.generation},
            {"segments", segs},
            {"condensed", cond},
            {"framework_snapshots", fws}};
  }

  std::optional<int64_t> next_deadline_locked() const {
    std::optional<int64_t> d;
    if (state_.capturing) d = next_tick_due(state_, cfg_.tick_ms);
    if (auto r = player_.next_due()) d = d ? std::min(*d, *r) : *r;
    return d;
  }

  void step_locked(int64_t now) {
    while (auto req = on_tick(state_, now, cfg_.tick_ms, cfg_.window_ms)) {
      // A silent window produces no condense job.
      if (utf8::trim(req->window_text).empty()) continue;
      outstanding_.insert(req->tick_index);
      jobs_.push_back({Lane::condense, [this, r = std::move(*req)] { run_condense(r); }});
    }
    pump_rsvp_locked(now);
  }

  void pump_rsvp_locked(int64_t now) {
    for (auto& d : player_.poll(now)) {
      emit_locked(EventKind::rsvp_token, {{"text", d.text},
                                          {"onset_ms", d.onset_ms},
                                          {"duration_ms", d.duration_ms},
                                          {"tick_index", d.tick_index},
                                          {"index", d.index},
                                          {"count", d.count}});
    }
  }

  bool stale(uint64_t generation) const {
    std::lock_guard lock(mu_);
    return generation != state_.generation;
  }

  // -- jobs (run without mu_) ----------------------------------------------

  void run_condense(const TickRequest& req) {
    if (stale(req.generation)) {
      std::lock_guard lock(mu_);
      ++stale_results_;
      return;
    }
    summarize::CondenseConfig cc;
    cc.limit = cfg_.condensed_limit;
    cc.deadline_ms = cfg_.llm_deadline_ms;
    cc.language = cfg_.language;
    cc.fallback_table = cfg_.fallback_table;
    auto outcome = summarize::condense(provider_, req, cc);
    if (!outcome.update.degraded) {
      outcome.update.emojis = summarize::select_emojis(provider_, outcome.dialogue, cfg_.llm_deadline_ms);
    }
    complete_condense(std::move(outcome.update));
  }

  void complete_condense(summarize::CondensedUpdate update) {
    {
      std::lock_guard lock(mu_);
      if (update.generation != state_.generation) {
        ++stale_results_;
        return;
      }
      const auto tick = update.tick_index;
      ready_.emplace(tick, std::move(update));
      // Results apply in tick order even if a later tick finished first.
      while (!outstanding_.empty()) {
        const auto it = ready_.find(*outstanding_.begin());
        if (it == ready_.end()) break;
        apply_condensed_locked(std::move(it->second));
        ready_.erase(it);
        outstanding_.erase(outstanding_.begin());
      }
    }
    flush();
  }

  void apply_condensed_locked(summarize::CondensedUpdate u) {
    const int64_t now = clock_.now_ms();
    state_.condensed_log.push_back(u);
    emit_locked(EventKind::condensed, summarize::to_json(u));
    player_.enqueue(rsvp::tokenize(u.text), now, u.tick_index);
    pump_rsvp_locked(now);

    const auto items = summarize::framework_items(state_.condensed_log);
    const auto n = items.size();
    const framework::TickRange range{state_.condensed_log[state_.condensed_log.size() - n].tick_index,
                                     state_.condensed_log.back().tick_index};
    jobs_.push_back({Lane::framework, [this, items, range, gen = state_.generation] {
                       run_framework(gen, items, range);
                     }});
  }

  void run_framework(uint64_t generation, const std::vector<std::string>& items, framework::TickRange range) {
    if (stale(generation)) {
      std::lock_guard lock(mu_);
      ++stale_results_;
      return;
    }
    std::optional<std::string> reply;
    std::string error;
    try {
      reply = summarize::summarize_framework(provider_, items, cfg_.language, cfg_.llm_deadline_ms);
    } catch (const summarize::ProviderError& e) {
      error = e.what();
    }
    std::lock_guard lock(mu_);
    if (generation != state_.generation) {
      ++stale_results_;
      return;
    }
    if (!reply) {
      emit_locked(EventKind::error, error_payload(nullptr, "framework_unavailable", error, "warning"));
      return;
    }
    framework::ParseReport report;
    try {
      report = framework::parse_framework(*reply);
    } catch (const framework::ParseError& e) {
      emit_locked(EventKind::error, error_payload(nullptr, "framework_parse_failed", e.what(), "warning"));
      return;
    }
    report.record.provenance = range;
    state_.framework_current = framework::merge(state_.framework_current, report.record);
    state_.framework_snapshots.push_back(state_.framework_current);
    auto payload = framework::to_json(state_.framework_current);
    payload["text"] = framework::render(state_.framework_current);
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : report.warnings) {
      warnings.push_back({{"kind", to_string(w.kind)},
                          {"line", w.line},
                          {"field", w.field ? nlohmann::json(framework::field_id(*w.field)) : nlohmann::json()}});
    }
    payload["warnings"] = std::move(warnings);
    emit_locked(EventKind::framework, std::move(payload));
  }

  /// Dispatches jobs and notices collected under the lock. Re-entrant calls
  /// from inline jobs return at once; the outermost loop picks up whatever
  /// they queued, which keeps inline execution order deterministic.
  void flush() {
    static thread_local const Engine* active = nullptr;
    if (active == this) return;
    const Engine* outer = active;
    active = this;
    while (true) {
      std::vector<Job> jobs;
      std::vector<std::function<void()>> notices;
      {
        std::lock_guard lock(mu_);
        jobs.swap(jobs_);
        notices.swap(notices_);
      }
      if (jobs.empty() && notices.empty()) break;
      for (auto& n : notices) n();
      for (auto& j : jobs) {
        if (!cfg_.threaded) {
          j.fn();
        } else if (j.lane == Lane::condense) {
          condense_lane_.post(std::move(j.fn));
        } else {
          framework_lane_.post(std::move(j.fn));
        }
      }
    }
    active = outer;
  }

  EngineConfig cfg_;
  Clock& clock_;
  summarize::LlmProvider& provider_;
  HistoryStore* store_;
  std::function<std::string()> wall_;

  mutable std::mutex mu_;
  std::condition_variable changed_cv_;
  uint64_t change_counter_ = 0;
  SessionState state_;
  rsvp::Player player_;
  nlohmann::json appearance_ = nlohmann::json::object();
  uint64_t stale_results_ = 0;

  std::set<int64_t> outstanding_;                            // ticks awaiting a result
  std::map<int64_t, summarize::CondensedUpdate> ready_;      // finished out of order
  std::vector<Job> jobs_;
  std::vector<std::function<void()>> notices_;

  std::deque<SessionEvent> backlog_;
  uint64_t backlog_start_ = 0;
  uint64_t next_index_ = 0;
  uint64_t last_clear_index_ = 0;
  std::vector<std::weak_ptr<Subscription>> subs_;
  std::function<void(const SessionEvent&)> observer_;
  std::function<void(bool)> capture_listener_;

  SerialLane condense_lane_;
  SerialLane framework_lane_;
};

}  // namespace livecap
