/* Copyright 2026 The laughtrack Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// JSON-Lines readers and writers for the corpus schemas:
//
//   manifest.jsonl     {"video_id","language","channel","duration_s","split"}
//   words.jsonl        {"video_id","idx","token","start_s","end_s"}
//   laughter.jsonl     {"video_id","start_s","end_s","source","score"?}
//   dataset.jsonl      {"video_id","language","tokens":[...],"labels":[...]}
//   predictions.jsonl  same shape as dataset.jsonl
//
// Readers validate every type invariant and report the offending line.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "laughtrack/corpus.hpp"
#include "laughtrack/error.hpp"

namespace laughtrack {

using ojson = nlohmann::ordered_json;

namespace detail {

// Calls `fn(json, line_no)` for every non-blank line.
inline void ForEachJsonLine(std::istream& in, const std::string& name,
                            const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(name, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(name, line_no, "expected a JSON object");
    fn(j, line_no);
  }
}

class Fields {
 public:
  Fields(const nlohmann::json& j, const std::string& name, std::size_t line)
      : j_(j), name_(name), line_(line) {}

  const nlohmann::json& Get(const char* key) const {
    auto it = j_.find(key);
    if (it == j_.end()) Fail(std::string("missing field \"") + key + "\"");
    return *it;
  }

  std::string String(const char* key) const {
    const auto& v = Get(key);
    if (!v.is_string()) Fail(std::string("field \"") + key + "\" must be a string");
    return v.get<std::string>();
  }

  double Number(const char* key) const {
    const auto& v = Get(key);
    if (!v.is_number()) Fail(std::string("field \"") + key + "\" must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) Fail(std::string("field \"") + key + "\" must be finite");
    return d;
  }

  std::int64_t Integer(const char* key) const {
    const auto& v = Get(key);
    if (!v.is_number_integer())
      Fail(std::string("field \"") + key + "\" must be an integer");
    return v.get<std::int64_t>();
  }

  bool Has(const char* key) const {
    auto it = j_.find(key);
    return it != j_.end() && !it->is_null();
  }

  [[noreturn]] void Fail(const std::string& what) const {
    throw ParseError(name_, line_, what);
  }

 private:
  const nlohmann::json& j_;
  const std::string& name_;
  std::size_t line_;
};

inline std::ifstream OpenIn(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return in;
}

inline std::ofstream OpenOut(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  return out;
}

inline void WriteLine(std::ostream& out, const ojson& j) {
  out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict) << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// manifest.jsonl

inline std::vector<VideoRecord> ReadManifest(std::istream& in,
                                             const std::string& name = "manifest") {
  std::vector<VideoRecord> out;
  std::set<std::string> seen;
  detail::ForEachJsonLine(in, name, [&](const nlohmann::json& j, std::size_t line) {
    detail::Fields f(j, name, line);
    VideoRecord v;
    v.video_id = f.String("video_id");
    if (v.video_id.empty()) f.Fail("video_id must be non-empty");
    v.language = f.String("language");
    if (!IsSupportedLanguage(v.language))
      f.Fail("language \"" + v.language + "\" is not one of cs,en,es,fr,hu,it,pt");
    v.channel = f.String("channel");
    v.duration_s = f.Number("duration_s");
    if (v.duration_s < 0) f.Fail("duration_s must be >= 0");
    const auto split = ParseSplit(f.String("split"));
    if (!split) f.Fail("split must be \"train\" or \"test\"");
    v.split = *split;
    if (!seen.insert(v.video_id).second)
      throw ValidationError(name + ":" + std::to_string(line) +
                            ": duplicate video_id \"" + v.video_id + "\"");
    out.push_back(std::move(v));
  });
  return out;
}

inline std::vector<VideoRecord> LoadManifest(const std::filesystem::path& path) {
  auto in = detail::OpenIn(path);
  return ReadManifest(in, path.string());
}

inline void WriteManifest(std::ostream& out, const std::vector<VideoRecord>& videos) {
  for (const auto& v : videos) {
    ojson j;
    j["video_id"] = v.video_id;
    j["language"] = v.language;
    j["channel"] = v.channel;
    j["duration_s"] = RoundMillis(v.duration_s);
    j["split"] = ToString(v.split);
    detail::WriteLine(out, j);
  }
}

// ---------------------------------------------------------------------------
// words.jsonl

inline std::vector<Word> ReadWords(std::istream& in, const std::string& name = "words") {
  std::vector<Word> out;
  struct Last {
    std::int64_t idx;
    double start;
  };
  std::map<std::string, Last> last;
  detail::ForEachJsonLine(in, name, [&](const nlohmann::json& j, std::size_t line) {
    detail::Fields f(j, name, line);
    Word w;
    w.video_id = f.String("video_id");
    if (w.video_id.empty()) f.Fail("video_id must be non-empty");
    w.idx = f.Integer("idx");
    if (w.idx < 0) f.Fail("idx must be >= 0");
    w.token = NormalizeToken(f.String("token"));
    if (w.token.empty()) f.Fail("token is empty after trimming");
    w.start_s = f.Number("start_s");
    w.end_s = f.Number("end_s");
    if (w.start_s < 0) f.Fail("start_s must be >= 0");
    if (w.end_s < w.start_s) f.Fail("end_s must be >= start_s");
    auto it = last.find(w.video_id);
    if (it != last.end()) {
      if (w.idx <= it->second.idx) f.Fail("idx must be strictly increasing within a video");
      if (w.start_s < it->second.start)
        f.Fail("start_s must be non-decreasing within a video");
    }
    last[w.video_id] = {w.idx, w.start_s};
    out.push_back(std::move(w));
  });
  return out;
}

inline std::vector<Word> LoadWords(const std::filesystem::path& path) {
  auto in = detail::OpenIn(path);
  return ReadWords(in, path.string());
}

inline void WriteWords(std::ostream& out, const std::vector<Word>& words) {
  for (const auto& w : words) {
    ojson j;
    j["video_id"] = w.video_id;
    j["idx"] = w.idx;
    j["token"] = w.token;
    j["start_s"] = RoundMillis(w.start_s);
    j["end_s"] = RoundMillis(w.end_s);
    detail::WriteLine(out, j);
  }
}

// ---------------------------------------------------------------------------
// laughter.jsonl

// Throws if two manual segments of one video overlap.
inline void CheckManualOverlaps(const std::vector<LaughterSegment>& laughs,
                                const std::string& name) {
  std::map<std::string, std::vector<std::pair<double, double>>> manual;
  for (const auto& l : laughs)
    if (l.source == LaughterSource::kManual)
      manual[l.video_id].emplace_back(l.start_s, l.end_s);
  for (auto& [video, spans] : manual) {
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first < spans[i - 1].second)
        throw ValidationError(name + ": overlapping manual laughter in video \"" +
                              video + "\" at " + std::to_string(spans[i].first) + " s");
    }
  }
}

inline std::vector<LaughterSegment> ReadLaughter(std::istream& in,
                                                 const std::string& name = "laughter") {
  std::vector<LaughterSegment> out;
  detail::ForEachJsonLine(in, name, [&](const nlohmann::json& j, std::size_t line) {
    detail::Fields f(j, name, line);
    LaughterSegment l;
    l.video_id = f.String("video_id");
    if (l.video_id.empty()) f.Fail("video_id must be non-empty");
    l.start_s = f.Number("start_s");
    l.end_s = f.Number("end_s");
    if (l.start_s < 0) f.Fail("start_s must be >= 0");
    if (!(l.start_s < l.end_s)) f.Fail("start_s must be < end_s");
    const auto source = ParseLaughterSource(f.String("source"));
    if (!source) f.Fail("source must be detector, asr_gap or manual");
    l.source = *source;
    if (f.Has("score")) {
      const double s = f.Number("score");
      if (s < 0.0 || s > 1.0) f.Fail("score must be in [0,1]");
      l.score = s;
    }
    out.push_back(std::move(l));
  });
  CheckManualOverlaps(out, name);
  return out;
}

inline std::vector<LaughterSegment> LoadLaughter(const std::filesystem::path& path) {
  auto in = detail::OpenIn(path);
  return ReadLaughter(in, path.string());
}

inline void WriteLaughter(std::ostream& out, const std::vector<LaughterSegment>& laughs) {
  for (const auto& l : laughs) {
    ojson j;
    j["video_id"] = l.video_id;
    j["start_s"] = RoundMillis(l.start_s);
    j["end_s"] = RoundMillis(l.end_s);
    j["source"] = ToString(l.source);
    if (l.score) j["score"] = *l.score;
    detail::WriteLine(out, j);
  }
}

// ---------------------------------------------------------------------------
// dataset.jsonl / predictions.jsonl

inline std::vector<LabeledSequence> ReadDataset(std::istream& in,
                                                const std::string& name = "dataset") {
  std::vector<LabeledSequence> out;
  std::set<std::string> seen;
  detail::ForEachJsonLine(in, name, [&](const nlohmann::json& j, std::size_t line) {
    detail::Fields f(j, name, line);
    LabeledSequence s;
    s.video_id = f.String("video_id");
    if (s.video_id.empty()) f.Fail("video_id must be non-empty");
    s.language = f.String("language");
    if (!IsSupportedLanguage(s.language))
      f.Fail("language \"" + s.language + "\" is not one of cs,en,es,fr,hu,it,pt");
    const auto& tokens = f.Get("tokens");
    const auto& labels = f.Get("labels");
    if (!tokens.is_array()) f.Fail("field \"tokens\" must be an array");
    if (!labels.is_array()) f.Fail("field \"labels\" must be an array");
    if (tokens.size() != labels.size())
      f.Fail("tokens and labels differ in length (" + std::to_string(tokens.size()) +
             " vs " + std::to_string(labels.size()) + ")");
    for (const auto& t : tokens) {
      if (!t.is_string()) f.Fail("tokens must be strings");
      auto tok = NormalizeToken(t.get<std::string>());
      if (tok.empty()) f.Fail("token is empty after trimming");
      s.tokens.push_back(std::move(tok));
    }
    for (const auto& l : labels) {
      if (!l.is_number_integer() || (l.get<int>() != 0 && l.get<int>() != 1))
        f.Fail("labels must be 0 or 1");
      s.labels.push_back(l.get<int>());
    }
    if (!seen.insert(s.video_id).second)
      f.Fail("duplicate video_id \"" + s.video_id + "\"");
    out.push_back(std::move(s));
  });
  return out;
}

inline std::vector<LabeledSequence> LoadDataset(const std::filesystem::path& path) {
  auto in = detail::OpenIn(path);
  return ReadDataset(in, path.string());
}

inline void WriteDataset(std::ostream& out, const std::vector<LabeledSequence>& seqs) {
  for (const auto& s : seqs) {
    ojson j;
    j["video_id"] = s.video_id;
    j["language"] = s.language;
    j["tokens"] = s.tokens;
    j["labels"] = s.labels;
    detail::WriteLine(out, j);
  }
}

// Path-based writers.
template <typename T, typename Writer>
void SaveJsonl(const std::filesystem::path& path, const std::vector<T>& items,
               Writer writer) {
  auto out = detail::OpenOut(path);
  writer(out, items);
  if (!out) throw Error(path.string() + ": write failed");
}

inline void SaveManifest(const std::filesystem::path& p, const std::vector<VideoRecord>& v) {
  SaveJsonl(p, v, [](std::ostream& o, const auto& x) { WriteManifest(o, x); });
}
inline void SaveWords(const std::filesystem::path& p, const std::vector<Word>& v) {
  SaveJsonl(p, v, [](std::ostream& o, const auto& x) { WriteWords(o, x); });
}
inline void SaveLaughter(const std::filesystem::path& p,
                         const std::vector<LaughterSegment>& v) {
  SaveJsonl(p, v, [](std::ostream& o, const auto& x) { WriteLaughter(o, x); });
}
inline void SaveDataset(const std::filesystem::path& p,
                        const std::vector<LabeledSequence>& v) {
  SaveJsonl(p, v, [](std::ostream& o, const auto& x) { WriteDataset(o, x); });
}

inline void SaveJson(const std::filesystem::path& path, const ojson& j) {
  auto out = detail::OpenOut(path);
  out << j.dump(2) << '\n';
}

}  // namespace laughtrack
