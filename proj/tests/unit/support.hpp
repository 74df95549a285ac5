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


// Shared helpers for the unit tests.

#pragma once

#include <chrono>
#include <filesystem>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "livecap/engine.hpp"
#include "livecap/summarize.hpp"

namespace livecap::testing {

inline std::string data_path(const std::string& rel) { return std::string(LIVECAP_DATA) + "/" + rel; }
inline std::string fixture_path(const std::string& rel) { return std::string(LIVECAP_FIXTURES) + "/" + rel; }

/// Fresh empty directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("livecap-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

/// Random UTF-8 text mixing CJK, Latin words, digits with decimals,
/// punctuation, emoji and whitespace.
inline std::string random_mixed_text(std::mt19937& rng, std::size_t pieces) {
  static const std::vector<std::string> atoms = {
      "纯", "棉", "T", "恤", "今", "天", "特", "价", "元", "，", "。", "！", " ", "  ", "\t",
      "9.9", "59", "hello", "World", "x", "ok.", "💰", "🏷️", "👍🏽", "é", "é", "-", "%", "（", "）", "3.14",
  };
  std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < pieces; ++i) out += atoms[pick(rng)];
  return out;
}

/// Mock LLM behind a random per-call delay.
class SlowProvider final : public summarize::LlmProvider {
 public:
  SlowProvider(unsigned seed, int max_delay_ms) : rng_(seed), max_delay_ms_(max_delay_ms) {}

  std::string complete(const summarize::Dialogue& d, int64_t deadline_ms) override {
    int delay;
    {
      std::lock_guard lock(mu_);
      delay = std::uniform_int_distribution<int>(0, max_delay_ms_)(rng_);
    }
    std::this_thread::sleep_for(std::chrono::microseconds(delay * 1000));
    return inner_.complete(d, deadline_ms);
  }

 private:
  std::mutex mu_;
  std::mt19937 rng_;
  int max_delay_ms_;
  summarize::MockLlmProvider inner_;
};

/// Returns canned text for every condense call; other turns go to the mock.
class FixedCondenseProvider final : public summarize::LlmProvider {
 public:
  explicit FixedCondenseProvider(std::string reply) : reply_(std::move(reply)) {}

  std::string complete(const summarize::Dialogue& d, int64_t deadline_ms) override {
    if (summarize::dialogue_kind(d) == summarize::PromptKind::condense) return reply_;
    return inner_.complete(d, deadline_ms);
  }

 private:
  std::string reply_;
  summarize::MockLlmProvider inner_;
};

inline TranscriptSegment seg(uint64_t seq, int64_t start, int64_t end, std::string text, bool final = true,
                             uint64_t generation = 0) {
  TranscriptSegment s;
  s.seq = seq;
  s.t_start_ms = start;
  s.t_end_ms = end;
  s.text = std::move(text);
  s.final = final;
  s.generation = generation;
  return s;
}

}  // namespace livecap::testing
