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

// Word-level laughter labels.
//
// span (default): for each laughter [t0, t1] find the boundary word of t0 and
//   of t1, where the boundary word of t is the first word whose interval
//   contains t, or else the last word ending before t. Every word from the
//   start boundary to the end boundary (inclusive) is positive. A laugh whose
//   t0 precedes the first word starts at word 0; a laugh that ends before the
//   first word starts is ignored and counted.
//
// next_word: word i is positive iff a laugh starts in (end_i, end_{i+1}];
//   the last word uses the video end as end_{i+1}.
//
// Labels from several laughs are OR-ed.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "laughtrack/corpus.hpp"
#include "laughtrack/error.hpp"
#include "laughtrack/io.hpp"

namespace laughtrack {

enum class LabelingScheme { kSpan, kNextWord };

inline std::string_view ToString(LabelingScheme s) {
  return s == LabelingScheme::kSpan ? "span" : "next_word";
}

inline std::optional<LabelingScheme> ParseLabelingScheme(std::string_view s) {
  if (s == "span") return LabelingScheme::kSpan;
  if (s == "next_word") return LabelingScheme::kNextWord;
  return std::nullopt;
}

struct LabelingConfig {
  LabelingScheme scheme = LabelingScheme::kSpan;
};

struct LabelingStats {
  std::size_t laughs = 0;
  std::size_t before_first_word = 0;
};

namespace detail {

// Boundary-word lookup over words sorted by start. Uses the running maximum of
// end times so that the first word containing t is found by binary search
// even when word intervals overlap.
class BoundaryIndex {
 public:
  explicit BoundaryIndex(std::span<const Word> words) : words_(words) {
    max_end_.reserve(words.size());
    double m = -1.0;
    for (const auto& w : words) {
      m = std::max(m, w.end_s);
      max_end_.push_back(m);
    }
  }

  // First word containing t, else last word ending before t, else nullopt.
  std::optional<std::size_t> Find(double t) const {
    // Words [0, started) have start <= t.
    const auto started = static_cast<std::size_t>(
        std::upper_bound(words_.begin(), words_.end(), t,
                         [](double v, const Word& w) { return v < w.start_s; }) -
        words_.begin());
    if (started == 0) return std::nullopt;
    const auto first_reaching = static_cast<std::size_t>(
        std::lower_bound(max_end_.begin(), max_end_.begin() + static_cast<std::ptrdiff_t>(started), t) -
        max_end_.begin());
    if (first_reaching < started) return first_reaching;
    // Every started word ended before t; later words start after t.
    return started - 1;
  }

 private:
  std::span<const Word> words_;
  std::vector<double> max_end_;
};

}  // namespace detail

// `words` must be one video's words sorted by start_s. `video_end_s` is only
// used by the next_word scheme.
inline std::vector<int> LabelWords(std::span<const Word> words,
                                   std::span<const LaughterSegment> laughs,
                                   const LabelingConfig& cfg = {}, double video_end_s = 0.0,
                                   LabelingStats* stats = nullptr) {
  std::vector<int> labels(words.size(), 0);
  LabelingStats local;
  local.laughs = laughs.size();
  if (words.empty()) {
    local.before_first_word = laughs.size();
    if (stats != nullptr) *stats = local;
    return labels;
  }
  for (std::size_t i = 1; i < words.size(); ++i)
    if (words[i].start_s < words[i - 1].start_s)
      throw ValidationError("words must be sorted by start_s");

  if (cfg.scheme == LabelingScheme::kSpan) {
    const detail::BoundaryIndex index(words);
    for (const auto& laugh : laughs) {
      if (laugh.end_s < words.front().start_s) {
        ++local.before_first_word;
        continue;
      }
      const std::size_t first = index.Find(laugh.start_s).value_or(0);
      const std::size_t last = index.Find(laugh.end_s).value_or(0);
      const auto [lo, hi] = std::minmax(first, last);
      std::fill(labels.begin() + static_cast<std::ptrdiff_t>(lo),
                labels.begin() + static_cast<std::ptrdiff_t>(hi) + 1, 1);
    }
  } else {
    std::vector<double> starts;
    starts.reserve(laughs.size());
    for (const auto& l : laughs) starts.push_back(l.start_s);
    std::sort(starts.begin(), starts.end());
    for (std::size_t i = 0; i < words.size(); ++i) {
      const double lo = words[i].end_s;
      const double hi = i + 1 < words.size() ? words[i + 1].end_s : video_end_s;
      // Any start in (lo, hi]?
      const auto it = std::upper_bound(starts.begin(), starts.end(), lo);
      if (it != starts.end() && *it <= hi) labels[i] = 1;
    }
    for (const auto& l : laughs)
      if (l.end_s < words.front().start_s) ++local.before_first_word;
  }
  if (stats != nullptr) *stats = local;
  return labels;
}

// ---------------------------------------------------------------------------
// labels.jsonl: {"video_id","idx","token","label"} one line per word

struct WordLabel {
  std::string video_id;
  std::int64_t idx = 0;
  std::string token;
  int label = 0;

  bool operator==(const WordLabel&) const = default;
};

inline std::vector<WordLabel> ReadWordLabels(std::istream& in, const std::string& name = "labels") {
  std::vector<WordLabel> out;
  std::map<std::string, std::int64_t> last_idx;
  detail::ForEachJsonLine(in, name, [&](const nlohmann::json& j, std::size_t line) {
    detail::Fields f(j, name, line);
    WordLabel w;
    w.video_id = f.String("video_id");
    w.idx = f.Integer("idx");
    w.token = NormalizeToken(f.String("token"));
    if (w.token.empty()) f.Fail("token is empty after trimming");
    const auto label = f.Integer("label");
    if (label != 0 && label != 1) f.Fail("label must be 0 or 1");
    w.label = static_cast<int>(label);
    auto it = last_idx.find(w.video_id);
    if (it != last_idx.end() && w.idx <= it->second)
      f.Fail("idx must be strictly increasing within a video");
    last_idx[w.video_id] = w.idx;
    out.push_back(std::move(w));
  });
  return out;
}

inline std::vector<WordLabel> LoadWordLabels(const std::filesystem::path& path) {
  auto in = detail::OpenIn(path);
  return ReadWordLabels(in, path.string());
}

inline void WriteWordLabels(std::ostream& out, const std::vector<WordLabel>& labels) {
  for (const auto& w : labels) {
    ojson j;
    j["video_id"] = w.video_id;
    j["idx"] = w.idx;
    j["token"] = w.token;
    j["label"] = w.label;
    detail::WriteLine(out, j);
  }
}

inline void SaveWordLabels(const std::filesystem::path& p, const std::vector<WordLabel>& v) {
  SaveJsonl(p, v, [](std::ostream& o, const auto& x) { WriteWordLabels(o, x); });
}

// ---------------------------------------------------------------------------
// Corpus-level labeling and dataset emission

struct EmitReport {
  std::size_t videos = 0;
  std::size_t skipped_no_words = 0;
  std::size_t words = 0;
  std::size_t positives = 0;
  std::size_t laughs_before_first_word = 0;
  std::vector<std::string> skipped;
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_language;  // words, positives

  double positive_rate() const {
    return words > 0 ? static_cast<double>(positives) / static_cast<double>(words) : 0.0;
  }
};

// Labels every video that has words, in the order of the word file. Laughs
// are clipped to [0, duration] when a manifest is given.
inline std::vector<WordLabel> LabelCorpus(const std::vector<Word>& words,
                                          const std::vector<LaughterSegment>& laughter,
                                          const LabelingConfig& cfg,
                                          const std::vector<VideoRecord>* manifest = nullptr,
                                          EmitReport* report = nullptr) {
  std::map<std::string, double> duration;
  if (manifest != nullptr)
    for (const auto& v : *manifest) duration[v.video_id] = v.duration_s;
  auto laughs_by_video = GroupByVideo(laughter);

  std::vector<std::string> order;
  std::map<std::string, std::vector<Word>> by_video;
  for (const auto& w : words) {
    auto [it, inserted] = by_video.try_emplace(w.video_id);
    if (inserted) order.push_back(w.video_id);
    it->second.push_back(w);
  }

  std::vector<WordLabel> out;
  out.reserve(words.size());
  for (const auto& id : order) {
    auto& vw = by_video[id];
    std::stable_sort(vw.begin(), vw.end(), [](const Word& a, const Word& b) { return a.idx < b.idx; });
    double end = vw.back().end_s;
    if (auto d = duration.find(id); d != duration.end()) end = d->second;
    else if (manifest != nullptr)
      throw ValidationError("words reference unknown video_id \"" + id + "\"");
    std::vector<LaughterSegment> laughs;
    if (auto it = laughs_by_video.find(id); it != laughs_by_video.end()) {
      for (auto l : it->second) {
        if (manifest != nullptr) {
          l.start_s = std::max(0.0, l.start_s);
          l.end_s = std::min(end, l.end_s);
          if (!(l.start_s < l.end_s)) continue;
        }
        laughs.push_back(l);
      }
    }
    SortByStart(laughs);
    LabelingStats stats;
    const auto labels = LabelWords(vw, laughs, cfg, end, &stats);
    if (report != nullptr) report->laughs_before_first_word += stats.before_first_word;
    for (std::size_t i = 0; i < vw.size(); ++i)
      out.push_back({id, vw[i].idx, vw[i].token, labels[i]});
  }
  return out;
}

// One sequence per manifest video that has labeled words, in manifest order.
inline std::vector<LabeledSequence> EmitDataset(const std::vector<VideoRecord>& manifest,
                                                const std::vector<WordLabel>& labels,
                                                EmitReport* report = nullptr) {
  std::map<std::string, std::vector<const WordLabel*>> by_video;
  std::set<std::string> known;
  for (const auto& v : manifest) known.insert(v.video_id);
  for (const auto& w : labels) {
    if (!known.count(w.video_id))
      throw ValidationError("labels reference unknown video_id \"" + w.video_id + "\"");
    by_video[w.video_id].push_back(&w);
  }
  EmitReport local;
  if (report != nullptr) local.laughs_before_first_word = report->laughs_before_first_word;
  std::vector<LabeledSequence> out;
  for (const auto& v : manifest) {
    auto it = by_video.find(v.video_id);
    if (it == by_video.end() || it->second.empty()) {
      ++local.skipped_no_words;
      local.skipped.push_back(v.video_id);
      continue;
    }
    auto& rows = it->second;
    std::stable_sort(rows.begin(), rows.end(),
                     [](const WordLabel* a, const WordLabel* b) { return a->idx < b->idx; });
    LabeledSequence seq;
    seq.video_id = v.video_id;
    seq.language = v.language;
    for (const auto* w : rows) {
      seq.tokens.push_back(w->token);
      seq.labels.push_back(w->label);
    }
    const auto pos = static_cast<std::size_t>(std::count(seq.labels.begin(), seq.labels.end(), 1));
    ++local.videos;
    local.words += seq.tokens.size();
    local.positives += pos;
    auto& lang = local.by_language[v.language];
    lang.first += seq.tokens.size();
    lang.second += pos;
    out.push_back(std::move(seq));
  }
  if (report != nullptr) *report = std::move(local);
  return out;
}

inline std::vector<LabeledSequence> EmitDataset(const std::vector<VideoRecord>& manifest,
                                                const std::vector<Word>& words,
                                                const std::vector<LaughterSegment>& laughter,
                                                const LabelingConfig& cfg,
                                                EmitReport* report = nullptr) {
  EmitReport local;
  const auto labels = LabelCorpus(words, laughter, cfg, &manifest, &local);
  auto out = EmitDataset(manifest, labels, &local);
  if (report != nullptr) *report = std::move(local);
  return out;
}

inline ojson EmitReportJson(const EmitReport& r) {
  ojson j;
  j["videos"] = r.videos;
  j["skipped_no_words"] = r.skipped_no_words;
  j["skipped"] = r.skipped;
  j["words"] = r.words;
  j["positive_labels"] = r.positives;
  j["positive_rate"] = r.positive_rate();
  j["laughs_before_first_word"] = r.laughs_before_first_word;
  ojson langs = ojson::object();
  for (const auto& [lang, counts] : r.by_language)
    langs[lang] = {{"words", counts.first}, {"positive_labels", counts.second}};
  j["by_language"] = std::move(langs);
  return j;
}

}  // namespace laughtrack
