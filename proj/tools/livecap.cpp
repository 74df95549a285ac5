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

// livecap: replay, serve, eval and history from the command line.
//
// Exit codes: 0 success, 2 usage, 1 runtime failure.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "livecap/eval.hpp"
#include "livecap/replay.hpp"
#include "livecap/serve.hpp"
#include "livecap/session.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_run_flags(CLI::App* cmd, livecap::RunConfig& c, std::optional<int64_t>& duration) {
  cmd->add_option("--fixture", c.fixture, "Transcript fixture (JSONL)")->check(CLI::ExistingFile);
  cmd->add_option("--audio", c.audio, "Raw audio file chunked into the ASR provider")->check(CLI::ExistingFile);
  cmd->add_option("--asr", c.asr, "ASR provider: echo | script:PATH | replay:FIXTURE")->capture_default_str();
  cmd->add_option("--llm", c.llm, "LLM provider: mock | cassette:PATH")->capture_default_str();
  cmd->add_option("--record-cassette", c.record_cassette, "Write every LLM exchange to this cassette");
  cmd->add_option("--keyword-table", c.keyword_table, "Keyword table for the mock provider")
      ->check(CLI::ExistingFile);
  cmd->add_option("--chunk-bytes", c.chunk_bytes, "Audio chunk size in bytes")->capture_default_str();
  cmd->add_option("--interval-ms", c.interval_ms, "Audio chunk interval")->capture_default_str();
  cmd->add_option("--tick-ms", c.tick_ms, "Condensation tick")->capture_default_str();
  cmd->add_option("--window-ms", c.window_ms, "Condensation window")->capture_default_str();
  cmd->add_option("--condensed-limit", c.condensed_limit, "Length bound of condensed text")->capture_default_str();
  cmd->add_option("--rsvp-rate", c.rsvp_rate, "RSVP tokens per minute")->capture_default_str();
  cmd->add_option("--language", c.language, "Prompt language: zh | en")->capture_default_str();
  cmd->add_option("--history-dir", c.history_dir, "History store directory");
  cmd->add_option("--session-id", c.session_id, "Session id (default: source file stem)");
  cmd->add_option("--duration-ms", duration, "Run the session this long");
  cmd->add_option("--llm-deadline-ms", c.llm_deadline_ms, "Per-call LLM deadline")->capture_default_str();
}

void check(const livecap::RunConfig& c) {
  try {
    livecap::validate(c);
  } catch (const livecap::ConfigError& e) {
    throw UsageError(e.what());
  }
}

int cmd_replay(livecap::RunConfig c) {
  if (c.fixture.empty() && c.audio.empty()) throw UsageError("replay needs --fixture or --audio");
  check(c);
  const auto result = livecap::run_replay(c);
  if (c.output.empty()) {
    livecap::write_log(result, std::cout);
  } else {
    std::ofstream out(c.output, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + c.output);
    livecap::write_log(result, out);
  }
  std::cerr << "replay: " << result.lines.size() << " events, " << result.condensed << " condensed, "
            << result.framework << " framework\n";
  return kExitOk;
}

struct EvalArgs {
  std::string annotations;
  std::string logs;
  std::string scores;
  std::string results;
  std::string report_jsonl;
};

int cmd_eval(const EvalArgs& a) {
  namespace ev = livecap::eval;
  const bool dirs = !a.annotations.empty() || !a.logs.empty();
  if (dirs == !a.scores.empty()) throw UsageError("eval needs either --annotations with --logs, or --scores");
  if (dirs && (a.annotations.empty() || a.logs.empty())) throw UsageError("--annotations and --logs go together");

  ev::Report report;
  std::string results;
  if (dirs) {
    const auto scores = ev::score_directories(a.annotations, a.logs);
    for (const auto& s : scores) results += ev::to_json(s).dump() + "\n";
    report = ev::aggregate(scores);
  } else {
    std::ifstream in(a.scores);
    if (!in) throw std::runtime_error("cannot open " + a.scores);
    report = ev::aggregate(ev::load_scores(in));
  }
  std::cout << ev::format_text(report);
  if (!a.results.empty()) {
    std::ofstream out(a.results, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + a.results);
    out << results;
  }
  if (!a.report_jsonl.empty()) {
    std::ofstream out(a.report_jsonl, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + a.report_jsonl);
    out << ev::format_jsonl(report);
  }
  return kExitOk;
}

int cmd_serve(livecap::ServeConfig cfg) {
  auto& c = cfg.run;
  // The source is optional here; reuse validation with a placeholder.
  livecap::RunConfig probe = c;
  if (probe.fixture.empty() && probe.audio.empty()) probe.fixture = "-";
  probe.clock = "real";
  check(probe);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  livecap::ServeRuntime runtime(cfg);
  runtime.start();
  std::cerr << "serving on ws://" << cfg.bind << ":" << runtime.port() << "/\n";
  int sig = 0;
  sigwait(&set, &sig);
  std::cerr << "shutting down\n";
  runtime.shutdown();
  return kExitOk;
}

int cmd_history_list(const std::string& dir) {
  livecap::HistoryStore store(dir);
  for (const auto& s : store.list()) {
    std::cout << s.id << "  " << s.started_at << "  " << s.session_id << "  segments=" << s.segments
              << " condensed=" << s.condensed << " framework=" << s.framework_snapshots << "\n";
  }
  return kExitOk;
}

int cmd_history_show(const std::string& dir, const std::string& id) {
  livecap::HistoryStore store(dir);
  const auto rec = store.load(id);
  std::cout << "# " << rec.id << " (" << rec.session_id << ", started " << rec.started_at << ")\n";
  std::cout << "## transcript\n";
  for (const auto& s : rec.segments) {
    std::cout << "[" << s.t_start_ms << "-" << s.t_end_ms << "] " << s.text << (s.final ? "" : " (provisional)")
              << "\n";
  }
  std::cout << "## condensed\n";
  for (const auto& c : rec.condensed) {
    std::cout << "tick " << c.tick_index << ": " << c.text;
    for (const auto& e : c.emojis) std::cout << " " << e.symbol;
    std::cout << "\n";
  }
  if (!rec.framework_snapshots.empty()) {
    std::cout << "## framework\n" << livecap::framework::render(rec.framework_snapshots.back());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"livecap: real-time caption condensation engine"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags win");
  app.require_subcommand(1);

  livecap::RunConfig run;
  std::optional<int64_t> duration;
  auto* replay = app.add_subcommand("replay", "Run a session from a fixture or audio file and write its event log");
  add_run_flags(replay, run, duration);
  replay->add_option("--clock", run.clock, "virtual | real")->capture_default_str();
  replay->add_option("--output,-o", run.output, "Event log path (default: stdout)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score event logs against annotations, or aggregate a scores file");
  eval->add_option("--annotations", eval_args.annotations, "Annotation directory")->check(CLI::ExistingDirectory);
  eval->add_option("--logs", eval_args.logs, "Event log directory")->check(CLI::ExistingDirectory);
  eval->add_option("--scores", eval_args.scores, "Scores file (JSONL)")->check(CLI::ExistingFile);
  eval->add_option("--results", eval_args.results, "Write per-session scores (JSONL)");
  eval->add_option("--report-jsonl", eval_args.report_jsonl, "Write the report as JSONL");

  livecap::ServeConfig serve_cfg;
  std::optional<int64_t> serve_duration;
  auto* serve = app.add_subcommand("serve", "Serve a live session over WebSocket");
  add_run_flags(serve, serve_cfg.run, serve_duration);
  serve->add_option("--bind", serve_cfg.bind, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_cfg.port, "Port (0 = any free port)")->capture_default_str();

  std::string history_dir = "history";
  std::string history_id;
  auto* history = app.add_subcommand("history", "Browse saved sessions");
  history->require_subcommand(1);
  auto* hlist = history->add_subcommand("list", "List saved sessions by start time");
  hlist->add_option("--history-dir", history_dir, "History store directory")->capture_default_str();
  auto* hshow = history->add_subcommand("show", "Print one saved session");
  hshow->add_option("--history-dir", history_dir, "History store directory")->capture_default_str();
  hshow->add_option("id", history_id, "Record id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*replay) {
      run.duration_ms = duration;
      return cmd_replay(run);
    }
    if (*eval) return cmd_eval(eval_args);
    if (*serve) {
      serve_cfg.run.duration_ms = serve_duration;
      return cmd_serve(serve_cfg);
    }
    if (*hlist) return cmd_history_list(history_dir);
    if (*hshow) return cmd_history_show(history_dir, history_id);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
