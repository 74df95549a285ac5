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

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "livecap/engine.hpp"
#include "livecap/gateway.hpp"
#include "livecap/replay.hpp"

namespace livecap {

struct ServeConfig {
  RunConfig run;  // source optional: without one, capture yields no speech
  std::string bind = "127.0.0.1";
  uint16_t port = 8765;
};

/// A live session behind the gateway: real clock, worker lanes for LLM
/// calls, and the configured source started and stopped with capture.
class ServeRuntime {
 public:
  explicit ServeRuntime(ServeConfig cfg)
      : cfg_(std::move(cfg)),
        providers_(cfg_.run),
        store_(cfg_.run.history_dir.empty() ? std::string("history") : cfg_.run.history_dir),
        engine_(make_engine_config(), clock_, providers_.provider(), &store_),
        gateway_(engine_, cfg_.bind, cfg_.port),
        driver_(engine_, clock_) {
    engine_.set_capture_listener([this](bool on) {
      if (on) {
        start_source();
      } else {
        stop_source();
      }
    });
  }

  ~ServeRuntime() { shutdown(); }

  void start() {
    driver_.start();
    gateway_.start();
  }

  /// Stops the gateway and the source, then saves any held content.
  void shutdown() {
    if (down_) return;
    down_ = true;
    gateway_.stop();
    stop_source();
    driver_.stop();
    engine_.shutdown();
    providers_.save_recording();
  }

  uint16_t port() const { return gateway_.port(); }
  Engine& engine() { return engine_; }
  HistoryStore& store() { return store_; }

 private:
  EngineConfig make_engine_config() const {
    auto e = engine_config(cfg_.run, &providers_.table());
    e.threaded = true;
    return e;
  }

  bool has_source() const { return !cfg_.run.fixture.empty() || !cfg_.run.audio.empty(); }

  void start_source() {
    if (!has_source()) return;
    stop_source();
    std::lock_guard lock(mu_);
    const int64_t origin = engine_.snapshot().capture_origin_ms;
    source_clock_ = std::make_unique<InterruptibleClock>(clock_, origin);
    source_thread_ = std::thread([this, origin, clk = source_clock_.get()] {
      try {
        run_source(cfg_.run, engine_, *clk, origin);
      } catch (const InterruptibleClock::Stopped&) {
      } catch (const std::exception& e) {
        engine_.ingest_error({e.what(), false});
      }
    });
  }

  void stop_source() {
    std::thread t;
    {
      std::lock_guard lock(mu_);
      if (source_clock_) source_clock_->stop();
      t = std::move(source_thread_);
    }
    if (t.joinable()) {
      // The source thread itself may deliver the stop notice.
      if (t.get_id() == std::this_thread::get_id()) {
        t.detach();
      } else {
        t.join();
      }
    }
    std::lock_guard lock(mu_);
    if (source_clock_) retired_.push_back(std::move(source_clock_));
  }

  ServeConfig cfg_;
  RealClock clock_;
  ProviderSet providers_;
  HistoryStore store_;
  Engine engine_;
  Gateway gateway_;
  LiveDriver driver_;
  std::mutex mu_;
  std::unique_ptr<InterruptibleClock> source_clock_;
  std::vector<std::unique_ptr<InterruptibleClock>> retired_;  // a detached source may still hold one
  std::thread source_thread_;
  bool down_ = false;
};

}  // namespace livecap
