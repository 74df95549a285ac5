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
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <thread>

namespace livecap {

enum class ClockKind { real, virtual_time };

/// Session-relative monotonic milliseconds. Every timing decision in the
/// pipeline goes through this interface.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual int64_t now_ms() const = 0;
  /// Blocks until now_ms() >= t.
  virtual void sleep_until(int64_t t) = 0;
  virtual ClockKind kind() const = 0;
};

class RealClock final : public Clock {
 public:
  RealClock() : origin_(std::chrono::steady_clock::now()) {}

  int64_t now_ms() const override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - origin_)
        .count();
  }

  void sleep_until(int64_t t) override {
    std::this_thread::sleep_until(origin_ + std::chrono::milliseconds(t));
  }

  ClockKind kind() const override { return ClockKind::real; }

 private:
  std::chrono::steady_clock::time_point origin_;
};

/// Time moves only through advance_to()/advance(). With self_advancing set,
/// sleep_until() performs the advance itself, which suits single-threaded
/// drivers; otherwise sleepers wait for another thread to advance.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(int64_t start = 0, bool self_advancing = true)
      : now_(start), self_advancing_(self_advancing) {}

  int64_t now_ms() const override {
    std::lock_guard lock(mu_);
    return now_;
  }

  void sleep_until(int64_t t) override {
    if (self_advancing_) {
      advance_to(t);
      return;
    }
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return now_ >= t; });
  }

  ClockKind kind() const override { return ClockKind::virtual_time; }

  void advance_to(int64_t t) {
    {
      std::lock_guard lock(mu_);
      now_ = std::max(now_, t);
    }
    cv_.notify_all();
  }

  void advance(int64_t by) {
    {
      std::lock_guard lock(mu_);
      now_ += std::max<int64_t>(by, 0);
    }
    cv_.notify_all();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int64_t now_;
  bool self_advancing_;
};

}  // namespace livecap
