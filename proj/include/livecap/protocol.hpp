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

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace livecap {

inline constexpr int kProtocolVersion = 1;

enum class EventKind { segment, segment_revised, condensed, framework, rsvp_token, state, error, history };

inline constexpr std::array<std::string_view, 8> kEventKindNames = {
    "segment", "segment_revised", "condensed", "framework", "rsvp_token", "state", "error", "history",
};

inline std::string_view to_string(EventKind k) { return kEventKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kEventKindNames.size(); ++i) {
    if (kEventKindNames[i] == s) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

enum class CommandKind {
  start_capture,
  stop_capture,
  clear,
  set_mode,
  set_rsvp_rate,
  set_appearance,
  list_history,
  load_history,
  pause_rsvp,
  resume_rsvp,
};

inline constexpr std::array<std::string_view, 10> kCommandKindNames = {
    "start_capture", "stop_capture",   "clear",        "set_mode",   "set_rsvp_rate",
    "set_appearance", "list_history", "load_history", "pause_rsvp", "resume_rsvp",
};

inline std::string_view to_string(CommandKind k) { return kCommandKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<CommandKind> command_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kCommandKindNames.size(); ++i) {
    if (kCommandKindNames[i] == s) return static_cast<CommandKind>(i);
  }
  return std::nullopt;
}

struct SessionEvent {
  uint64_t seq = 0;  // assigned per connection on delivery
  uint64_t generation = 0;
  EventKind kind = EventKind::state;
  int64_t at_ms = 0;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const SessionEvent&) const = default;
};

/// `kind` stays empty when the name is not a known command; the engine
/// answers those with an error event rather than dropping the connection.
struct SessionCommand {
  nlohmann::json id;  // string or integer, echoed verbatim
  std::string kind_name;
  std::optional<CommandKind> kind;
  nlohmann::json args = nlohmann::json::object();
};

/// Malformed message: the connection that sent it gets closed.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json event_to_json(const SessionEvent& e) {
  return {{"v", kProtocolVersion},       {"seq", e.seq},       {"generation", e.generation},
          {"kind", to_string(e.kind)},   {"at_ms", e.at_ms},   {"payload", e.payload}};
}

inline std::string encode_event(const SessionEvent& e) { return event_to_json(e).dump(); }

namespace detail {

inline nlohmann::json parse_object(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("message is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message is not a JSON object");
  return j;
}

template <std::size_t N>
void require_exact_fields(const nlohmann::json& j, const std::array<std::string_view, N>& allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ProtocolError("unknown top-level field '" + key + "'");
  }
  for (auto a : allowed) {
    if (!j.contains(std::string(a))) throw ProtocolError("missing field '" + std::string(a) + "'");
  }
  const auto& v = j["v"];
  if (!v.is_number_integer() || v.get<int64_t>() != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version");
  }
}

}  // namespace detail

inline SessionEvent decode_event(std::string_view text) {
  const auto j = detail::parse_object(text);
  static constexpr std::array<std::string_view, 6> kFields = {"v", "seq", "generation", "kind", "at_ms",
                                                              "payload"};
  detail::require_exact_fields(j, kFields);
  SessionEvent e;
  if (!j["seq"].is_number_unsigned()) throw ProtocolError("seq must be a non-negative integer");
  if (!j["generation"].is_number_unsigned()) throw ProtocolError("generation must be a non-negative integer");
  if (!j["at_ms"].is_number_integer()) throw ProtocolError("at_ms must be an integer");
  if (!j["kind"].is_string()) throw ProtocolError("kind must be a string");
  if (!j["payload"].is_object()) throw ProtocolError("payload must be an object");
  const auto kind = event_kind_from_string(j["kind"].get<std::string>());
  if (!kind) throw ProtocolError("unknown event kind '" + j["kind"].get<std::string>() + "'");
  e.seq = j["seq"].get<uint64_t>();
  e.generation = j["generation"].get<uint64_t>();
  e.kind = *kind;
  e.at_ms = j["at_ms"].get<int64_t>();
  e.payload = j["payload"];
  return e;
}

inline std::string encode_command(const SessionCommand& c) {
  return nlohmann::json{{"v", kProtocolVersion},
                        {"id", c.id},
                        {"kind", c.kind ? std::string(to_string(*c.kind)) : c.kind_name},
                        {"args", c.args}}
      .dump();
}

inline SessionCommand make_command(nlohmann::json id, CommandKind kind,
                                   nlohmann::json args = nlohmann::json::object()) {
  return {std::move(id), std::string(to_string(kind)), kind, std::move(args)};
}

/// Envelope validation only; kind-specific args are checked by the engine.
inline SessionCommand decode_command(std::string_view text) {
  const auto j = detail::parse_object(text);
  static constexpr std::array<std::string_view, 4> kFields = {"v", "id", "kind", "args"};
  detail::require_exact_fields(j, kFields);
  const auto& id = j["id"];
  if (!(id.is_string() && !id.get<std::string>().empty()) && !id.is_number_integer()) {
    throw ProtocolError("id must be a nonempty string or an integer");
  }
  if (!j["kind"].is_string()) throw ProtocolError("kind must be a string");
  if (!j["args"].is_object()) throw ProtocolError("args must be an object");
  SessionCommand c;
  c.id = id;
  c.kind_name = j["kind"].get<std::string>();
  c.kind = command_kind_from_string(c.kind_name);
  c.args = j["args"];
  return c;
}

}  // namespace livecap
