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
#include <cstdint>
#include <string>

namespace livecap {

inline constexpr int64_t kDefaultTickMs = 30000;
inline constexpr int64_t kDefaultWindowMs = 40000;

/// One condensation cycle: the text heard in the trailing window at a tick.
struct TickRequest {
  int64_t tick_index = 0;
  uint64_t generation = 0;
  int64_t window_start_ms = 0;
  int64_t window_end_ms = 0;
  std::string window_text;
};

struct TickWindow {
  int64_t start_ms;
  int64_t end_ms;
};

/// Tick k closes at origin + tick_ms * (k + 1) and looks back window_ms,
/// never before the origin.
constexpr TickWindow tick_window(int64_t origin_ms, int64_t tick_index,
                                 int64_t tick_ms = kDefaultTickMs,
                                 int64_t window_ms = kDefaultWindowMs) {
  const int64_t end = origin_ms + tick_ms * (tick_index + 1);
  return {std::max(origin_ms, end - window_ms), end};
}

}  // namespace livecap
