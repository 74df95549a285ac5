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
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "livecap/framework.hpp"
#include "livecap/protocol.hpp"
#include "livecap/utf8.hpp"

namespace livecap::eval {

inline constexpr std::size_t kSamplesPerSession = 10;

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground truth for one 30 s sample.
struct AnnotatedSample {
  std::size_t sample_index = 0;
  framework::FrameworkRecord expected_framework;
  std::vector<std::string> required_condensed_facts;
  std::vector<std::string> other_products;
  std::vector<std::pair<framework::Field, std::string>> subcategory_flags;
  std::map<framework::Field, std::vector<std::string>> accepted_paraphrases;
  /// Fields the annotator asserts were never mentioned; a value there is
  /// fabricated. Absent-expected fields not listed here go unchecked.
  std::vector<framework::Field> check_absent;
};

struct SessionAnnotations {
  std::string session_id;
  std::string platform;
  std::string category;
  std::vector<AnnotatedSample> samples;
};

/// What the viewer had on screen at a sample time.
struct Observation {
  std::string condensed_text;
  framework::FrameworkRecord framework;
};

struct Discrepancy {
  framework::Field field;
  framework::DiscrepancyReason reason;
  bool operator==(const Discrepancy&) const = default;
};

struct SampleScore {
  int point = 0;
  bool condensed_ok = false;
  bool framework_ok = false;
  bool observed = false;
  std::vector<std::string> missing_facts;
  std::vector<Discrepancy> discrepancies;
};

struct SessionScore {
  std::string session_id;
  std::string platform;
  std::string category;
  std::vector<SampleScore> per_sample;
  int total = 0;
};

// ---------------------------------------------------------------------------
// Annotation files
// ---------------------------------------------------------------------------

namespace detail {

inline framework::Field field_or_throw(const std::string& id) {
  auto f = framework::field_from_id(id);
  if (!f) throw EvalError("unknown field '" + id + "'");
  return *f;
}

inline std::vector<std::string> strings(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace detail

/// Sample objects carry the expected framework in the canonical ten-line
/// form; subcategory flags are [field, value] pairs.
inline AnnotatedSample sample_from_json(const nlohmann::json& j) {
  AnnotatedSample s;
  s.sample_index = j.at("sample_index").get<std::size_t>();
  const auto& fw = j.at("expected_framework");
  if (fw.is_string()) {
    s.expected_framework = framework::parse_framework(fw.get<std::string>()).record;
  } else {
    s.expected_framework = framework::record_from_json({{"fields", fw}});
  }
  s.required_condensed_facts = detail::strings(j, "required_condensed_facts");
  s.other_products = detail::strings(j, "other_products");
  if (j.contains("subcategory_flags")) {
    for (const auto& p : j["subcategory_flags"]) {
      s.subcategory_flags.emplace_back(detail::field_or_throw(p.at(0).get<std::string>()),
                                       p.at(1).get<std::string>());
    }
  }
  if (j.contains("accepted_paraphrases")) {
    for (const auto& [key, values] : j["accepted_paraphrases"].items()) {
      auto& dst = s.accepted_paraphrases[detail::field_or_throw(key)];
      for (const auto& v : values) dst.push_back(v.get<std::string>());
    }
  }
  for (const auto& id : detail::strings(j, "check_absent")) s.check_absent.push_back(detail::field_or_throw(id));
  return s;
}

inline SessionAnnotations annotations_from_json(const nlohmann::json& j, const std::string& fallback_id = {}) {
  SessionAnnotations a;
  a.session_id = j.value("session_id", fallback_id);
  a.platform = j.at("platform").get<std::string>();
  a.category = j.at("category").get<std::string>();
  for (const auto& s : j.at("samples")) a.samples.push_back(sample_from_json(s));
  return a;
}

inline SessionAnnotations load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open annotation file " + path.string());
  try {
    return annotations_from_json(nlohmann::json::parse(in), path.stem().string());
  } catch (const nlohmann::json::exception& e) {
    throw EvalError(path.string() + ": " + e.what());
  } catch (const framework::ParseError& e) {
    throw EvalError(path.string() + ": expected_framework: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Event logs
// ---------------------------------------------------------------------------

/// Samples a recorded event log at each tick: sample i sees the condensed
/// update for tick i and the newest framework built from ticks <= i. Only
/// the final generation counts. No condensed update for a tick means no
/// observation, which scores 0.
inline std::vector<std::optional<Observation>> observations_from_log(std::istream& in,
                                                                     std::size_t samples = kSamplesPerSession) {
  std::map<int64_t, std::string> condensed;
  std::vector<std::pair<int64_t, framework::FrameworkRecord>> frameworks;
  uint64_t generation = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    SessionEvent e;
    try {
      e = decode_event(line);
    } catch (const ProtocolError& err) {
      throw EvalError("event log line " + std::to_string(line_no) + ": " + err.what());
    }
    if (e.generation > generation) {
      generation = e.generation;
      condensed.clear();
      frameworks.clear();
    } else if (e.generation < generation) {
      continue;
    }
    if (e.kind == EventKind::condensed) {
      condensed[e.payload.at("tick_index").get<int64_t>()] = e.payload.at("text").get<std::string>();
    } else if (e.kind == EventKind::framework) {
      auto rec = framework::record_from_json(e.payload);
      const int64_t last = rec.provenance ? rec.provenance->last : -1;
      frameworks.emplace_back(last, std::move(rec));
    }
  }
  std::vector<std::optional<Observation>> out(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto it = condensed.find(static_cast<int64_t>(i));
    if (it == condensed.end()) continue;
    Observation o;
    o.condensed_text = it->second;
    for (const auto& [last, rec] : frameworks) {
      if (last <= static_cast<int64_t>(i)) o.framework = rec;
    }
    out[i] = std::move(o);
  }
  return out;
}

inline std::vector<std::optional<Observation>> load_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open event log " + path.string());
  return observations_from_log(in);
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

inline bool contains_fact(std::string_view text, std::string_view fact) {
  const auto f = utf8::normalize(fact);
  return utf8::normalize(text).find(f) != std::string::npos;
}

inline SampleScore score_sample(const AnnotatedSample& a, const std::optional<Observation>& obs) {
  SampleScore s;
  if (!obs) {
    s.missing_facts = a.required_condensed_facts;
    return s;
  }
  s.observed = true;
  for (const auto& f : a.required_condensed_facts) {
    if (!contains_fact(obs->condensed_text, f)) s.missing_facts.push_back(f);
  }
  s.condensed_ok = s.missing_facts.empty();
  for (const auto field : framework::kAllFields) {
    const auto& expected = a.expected_framework.get(field);
    const bool probe_absent =
        std::find(a.check_absent.begin(), a.check_absent.end(), field) != a.check_absent.end();
    if (!expected && !probe_absent) continue;
    framework::AnnotationContext ctx;
    if (auto it = a.accepted_paraphrases.find(field); it != a.accepted_paraphrases.end()) {
      ctx.accepted_paraphrases = it->second;
    }
    ctx.other_products = a.other_products;
    for (const auto& [f, v] : a.subcategory_flags) {
      if (f == field) ctx.subcategories.push_back(v);
    }
    if (auto reason = framework::classify_discrepancy(expected, obs->framework.get(field), ctx)) {
      s.discrepancies.push_back({field, *reason});
    }
  }
  s.framework_ok = s.discrepancies.empty();
  s.point = s.condensed_ok && s.framework_ok ? 1 : 0;
  return s;
}

inline SessionScore score_session(const SessionAnnotations& annotations,
                                  const std::vector<std::optional<Observation>>& observed) {
  if (annotations.samples.size() != kSamplesPerSession) {
    throw EvalError("session " + annotations.session_id + ": expected " + std::to_string(kSamplesPerSession) +
                    " annotated samples, got " + std::to_string(annotations.samples.size()));
  }
  if (observed.size() != kSamplesPerSession) {
    throw EvalError("session " + annotations.session_id + ": expected " + std::to_string(kSamplesPerSession) +
                    " observation slots, got " + std::to_string(observed.size()));
  }
  SessionScore score;
  score.session_id = annotations.session_id;
  score.platform = annotations.platform;
  score.category = annotations.category;
  score.per_sample.resize(kSamplesPerSession);
  std::vector<bool> seen(kSamplesPerSession, false);
  for (const auto& a : annotations.samples) {
    if (a.sample_index >= kSamplesPerSession || seen[a.sample_index]) {
      throw EvalError("session " + annotations.session_id + ": bad or duplicate sample_index " +
                      std::to_string(a.sample_index));
    }
    seen[a.sample_index] = true;
    score.per_sample[a.sample_index] = score_sample(a, observed[a.sample_index]);
  }
  for (const auto& s : score.per_sample) score.total += s.point;
  return score;
}

inline nlohmann::json to_json(const SessionScore& s) {
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < s.per_sample.size(); ++i) {
    const auto& p = s.per_sample[i];
    nlohmann::json d = nlohmann::json::array();
    for (const auto& x : p.discrepancies) d.push_back({framework::field_id(x.field), to_string(x.reason)});
    samples.push_back({{"sample_index", i},
                       {"point", p.point},
                       {"observed", p.observed},
                       {"condensed_ok", p.condensed_ok},
                       {"framework_ok", p.framework_ok},
                       {"missing_facts", p.missing_facts},
                       {"discrepancies", d}});
  }
  return {{"session_id", s.session_id},
          {"platform", s.platform},
          {"category", s.category},
          {"total", s.total},
          {"per_sample", samples}};
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct ScoreEntry {
  std::string platform;
  std::string category;
  double total = 0;
};

/// Platform x category matrix. A cell with several sessions holds their
/// mean; row, column and grand averages are means over the cells present.
struct Report {
  std::vector<std::string> platforms;   // sorted
  std::vector<std::string> categories;  // sorted
  std::map<std::pair<std::string, std::string>, double> cells;
  std::map<std::string, double> row_average;
  std::map<std::string, double> column_average;
  std::optional<double> grand_average;

  bool empty() const { return cells.empty(); }
};

inline Report aggregate(const std::vector<ScoreEntry>& scores) {
  Report r;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> sums;
  for (const auto& s : scores) {
    auto& acc = sums[{s.platform, s.category}];
    acc.first += s.total;
    acc.second += 1;
  }
  std::map<std::string, std::pair<double, int>> rows, cols;
  double grand = 0;
  for (const auto& [key, acc] : sums) {
    const double cell = acc.first / acc.second;
    r.cells[key] = cell;
    rows[key.first].first += cell;
    rows[key.first].second += 1;
    cols[key.second].first += cell;
    cols[key.second].second += 1;
    grand += cell;
  }
  for (const auto& [p, acc] : rows) {
    r.platforms.push_back(p);
    r.row_average[p] = acc.first / acc.second;
  }
  for (const auto& [c, acc] : cols) {
    r.categories.push_back(c);
    r.column_average[c] = acc.first / acc.second;
  }
  if (!r.cells.empty()) r.grand_average = grand / static_cast<double>(r.cells.size());
  return r;
}

inline Report aggregate(const std::vector<SessionScore>& scores) {
  std::vector<ScoreEntry> entries;
  entries.reserve(scores.size());
  for (const auto& s : scores) entries.push_back({s.platform, s.category, static_cast<double>(s.total)});
  return aggregate(entries);
}

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

/// Aligned plain-text table: platforms down, categories across, averages
/// in the last column and row.
inline std::string format_text(const Report& r) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"Platform"};
  for (const auto& c : r.categories) header.push_back(c);
  header.push_back("Avg");
  rows.push_back(header);
  for (const auto& p : r.platforms) {
    std::vector<std::string> row = {p};
    for (const auto& c : r.categories) {
      const auto it = r.cells.find({p, c});
      row.push_back(it == r.cells.end() ? "-" : fixed2(it->second));
    }
    row.push_back(fixed2(r.row_average.at(p)));
    rows.push_back(row);
  }
  if (!r.empty()) {
    std::vector<std::string> avg = {"Avg"};
    for (const auto& c : r.categories) avg.push_back(fixed2(r.column_average.at(c)));
    avg.push_back(fixed2(*r.grand_average));
    rows.push_back(avg);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], utf8::graphemes(row[i]).size());
    }
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto pad = width[i] - utf8::graphemes(row[i]).size();
      if (i == 0) {
        line += row[i] + std::string(pad, ' ');
      } else {
        line += "  " + std::string(pad, ' ') + row[i];
      }
    }
    out += line + "\n";
  }
  return out;
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// Line-delimited form of the same report.
inline std::string format_jsonl(const Report& r) {
  std::string out;
  for (const auto& [key, v] : r.cells) {
    out += nlohmann::json{{"type", "cell"}, {"platform", key.first}, {"category", key.second}, {"score", round2(v)}}
               .dump() +
           "\n";
  }
  for (const auto& p : r.platforms) {
    out += nlohmann::json{{"type", "row_average"}, {"platform", p}, {"average", round2(r.row_average.at(p))}}
               .dump() +
           "\n";
  }
  for (const auto& c : r.categories) {
    out += nlohmann::json{{"type", "column_average"}, {"category", c}, {"average", round2(r.column_average.at(c))}}
               .dump() +
           "\n";
  }
  if (r.grand_average) {
    out += nlohmann::json{{"type", "grand_average"}, {"average", round2(*r.grand_average)}}.dump() + "\n";
  }
  return out;
}

/// Scores file: one {"platform", "category", "total"} object per line.
inline std::vector<ScoreEntry> load_scores(std::istream& in) {
  std::vector<ScoreEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("platform").get<std::string>(), j.at("category").get<std::string>(),
                     j.at("total").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw EvalError("scores line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Directory batch
// ---------------------------------------------------------------------------

/// Pairs every annotation file (*.json) in `annotation_dir` with the event
/// log <session_id>.jsonl in `log_dir`. Session order is by id.
inline std::vector<SessionScore> score_directories(const std::filesystem::path& annotation_dir,
                                                   const std::filesystem::path& log_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(annotation_dir)) throw EvalError("not a directory: " + annotation_dir.string());
  if (!fs::is_directory(log_dir)) throw EvalError("not a directory: " + log_dir.string());
  std::map<std::string, SessionAnnotations> annotations;
  for (const auto& entry : fs::directory_iterator(annotation_dir)) {
    if (entry.path().extension() != ".json") continue;
    auto a = load_annotations(entry.path());
    const auto id = a.session_id;
    if (!annotations.emplace(id, std::move(a)).second) throw EvalError("duplicate session id " + id);
  }
  std::map<std::string, fs::path> logs;
  for (const auto& entry : fs::directory_iterator(log_dir)) {
    if (entry.path().extension() == ".jsonl") logs[entry.path().stem().string()] = entry.path();
  }
  for (const auto& [id, path] : logs) {
    if (!annotations.count(id)) throw EvalError("event log without annotations: " + id);
  }
  std::vector<SessionScore> out;
  for (const auto& [id, a] : annotations) {
    const auto it = logs.find(id);
    if (it == logs.end()) throw EvalError("annotations without event log: " + id);
    out.push_back(score_session(a, load_observations(it->second)));
  }
  return out;
}

}  // namespace livecap::eval
