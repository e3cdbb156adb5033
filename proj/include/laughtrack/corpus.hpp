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

// Data model shared by every stage: videos, ASR words, laughter segments and
// word-level labeled sequences, plus corpus statistics.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "laughtrack/error.hpp"

namespace laughtrack {

inline constexpr std::array<std::string_view, 7> kLanguages = {
    "cs", "en", "es", "fr", "hu", "it", "pt"};

inline bool IsSupportedLanguage(std::string_view code) {
  return std::find(kLanguages.begin(), kLanguages.end(), code) !=
         kLanguages.end();
}

enum class Split { kTrain, kTest };

inline std::string_view ToString(Split s) {
  return s == Split::kTrain ? "train" : "test";
}

inline std::optional<Split> ParseSplit(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

enum class LaughterSource { kDetector, kAsrGap, kManual };

inline std::string_view ToString(LaughterSource s) {
  switch (s) {
    case LaughterSource::kDetector: return "detector";
    case LaughterSource::kAsrGap: return "asr_gap";
    case LaughterSource::kManual: return "manual";
  }
  return "detector";
}

inline std::optional<LaughterSource> ParseLaughterSource(std::string_view s) {
  if (s == "detector") return LaughterSource::kDetector;
  if (s == "asr_gap") return LaughterSource::kAsrGap;
  if (s == "manual") return LaughterSource::kManual;
  return std::nullopt;
}

struct VideoRecord {
  std::string video_id;
  std::string language;
  std::string channel;
  double duration_s = 0.0;
  Split split = Split::kTrain;

  bool operator==(const VideoRecord&) const = default;
};

struct Word {
  std::string video_id;
  std::int64_t idx = 0;
  std::string token;
  double start_s = 0.0;
  double end_s = 0.0;

  double duration() const { return end_s - start_s; }
  bool operator==(const Word&) const = default;
};

struct LaughterSegment {
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  LaughterSource source = LaughterSource::kDetector;
  std::optional<double> score;

  double duration() const { return end_s - start_s; }
  bool operator==(const LaughterSegment&) const = default;
};

struct LabeledSequence {
  std::string video_id;
  std::string language;
  std::vector<std::string> tokens;
  std::vector<int> labels;

  bool operator==(const LabeledSequence&) const = default;
};

// Timestamps are kept at millisecond resolution on disk.
inline double RoundMillis(double seconds) {
  return std::round(seconds * 1000.0) / 1000.0;
}

// Leading/trailing whitespace is dropped; case and punctuation are kept.
inline std::string NormalizeToken(std::string_view token) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = token.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = token.find_last_not_of(kSpace);
  return std::string(token.substr(first, last - first + 1));
}

inline bool IntervalsOverlap(double a0, double a1, double b0, double b1) {
  return std::min(a1, b1) > std::max(a0, b0);
}

inline double OverlapLength(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Groups records by video_id preserving file order inside each group.
template <typename T>
std::map<std::string, std::vector<T>> GroupByVideo(const std::vector<T>& items) {
  std::map<std::string, std::vector<T>> out;
  for (const auto& item : items) out[item.video_id].push_back(item);
  return out;
}

inline void SortByStart(std::vector<LaughterSegment>& laughs) {
  std::stable_sort(laughs.begin(), laughs.end(),
                   [](const LaughterSegment& a, const LaughterSegment& b) {
                     if (a.video_id != b.video_id) return a.video_id < b.video_id;
                     if (a.start_s != b.start_s) return a.start_s < b.start_s;
                     return a.end_s < b.end_s;
                   });
}

// ---------------------------------------------------------------------------
// Statistics

struct StatsRow {
  std::int64_t videos = 0;
  double seconds = 0.0;
  std::int64_t words = 0;
  std::int64_t laughter = 0;
  // Positive word labels; only filled when a dataset is supplied.
  std::int64_t laughter_labels = 0;

  double hours() const { return std::round(seconds / 3600.0 * 10.0) / 10.0; }

  StatsRow& operator+=(const StatsRow& o) {
    videos += o.videos;
    seconds += o.seconds;
    words += o.words;
    laughter += o.laughter;
    laughter_labels += o.laughter_labels;
    return *this;
  }
  bool operator==(const StatsRow&) const = default;
};

struct StatsReport {
  std::map<std::string, StatsRow> by_language;
  StatsRow total;
};

// Checks that words/laughter only reference manifest ids and stay inside each
// video's duration. Offending ids are listed in the error message.
inline void ValidateReferences(const std::vector<VideoRecord>& manifest,
                               const std::vector<Word>& words,
                               const std::vector<LaughterSegment>& laughter) {
  std::map<std::string, double> duration;
  for (const auto& v : manifest) duration[v.video_id] = v.duration_s;

  std::set<std::string> dangling;
  std::set<std::string> too_long;
  constexpr double kSlack = 1e-3;
  for (const auto& w : words) {
    auto it = duration.find(w.video_id);
    if (it == duration.end()) dangling.insert(w.video_id);
    else if (w.end_s > it->second + kSlack) too_long.insert(w.video_id);
  }
  for (const auto& l : laughter) {
    auto it = duration.find(l.video_id);
    if (it == duration.end()) dangling.insert(l.video_id);
    else if (l.end_s > it->second + kSlack) too_long.insert(l.video_id);
  }
  auto join = [](const std::set<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
    return out;
  };
  if (!dangling.empty())
    throw ValidationError("unknown video_id(s) not in manifest: " + join(dangling));
  if (!too_long.empty())
    throw ValidationError("timestamps beyond manifest duration_s for: " +
                          join(too_long));
}

inline StatsReport CorpusStats(const std::vector<VideoRecord>& manifest,
                               const std::vector<Word>& words,
                               const std::vector<LaughterSegment>& laughter,
                               const std::vector<LabeledSequence>* dataset = nullptr) {
  ValidateReferences(manifest, words, laughter);
  std::map<std::string, std::string> language;
  StatsReport report;
  for (const auto& v : manifest) {
    language[v.video_id] = v.language;
    auto& row = report.by_language[v.language];
    row.videos += 1;
    row.seconds += v.duration_s;
  }
  for (const auto& w : words) report.by_language[language[w.video_id]].words += 1;
  for (const auto& l : laughter)
    report.by_language[language[l.video_id]].laughter += 1;
  if (dataset != nullptr) {
    std::set<std::string> dangling;
    for (const auto& seq : *dataset) {
      auto it = language.find(seq.video_id);
      if (it == language.end()) {
        dangling.insert(seq.video_id);
        continue;
      }
      report.by_language[it->second].laughter_labels +=
          std::count(seq.labels.begin(), seq.labels.end(), 1);
    }
    if (!dangling.empty())
      throw ValidationError("dataset references unknown video_id: " +
                            *dangling.begin());
  }
  for (const auto& [lang, row] : report.by_language) report.total += row;
  return report;
}

}  // namespace laughtrack
