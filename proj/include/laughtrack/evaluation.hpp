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

// Segment-level (IoU matching) and token-level scoring of laughter systems.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "laughtrack/corpus.hpp"
#include "laughtrack/error.hpp"
#include "laughtrack/io.hpp"

namespace laughtrack {

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

inline double Iou(const Interval& a, const Interval& b) {
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = (a.end - a.start) + (b.end - b.start) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  double precision() const { return tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0; }
  double recall() const { return tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct EvalConfig {
  double iou_threshold = 0.2;

  void Validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
      throw ValidationError("iou_threshold must be in (0, 1]");
  }
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> true_positives;  // (pred, gold)
  std::vector<std::size_t> false_positives;                         // pred indices
  std::vector<std::size_t> false_negatives;                         // gold indices

  Counts counts() const {
    return {static_cast<std::int64_t>(true_positives.size()),
            static_cast<std::int64_t>(false_positives.size()),
            static_cast<std::int64_t>(false_negatives.size())};
  }
};

// Greedy one-to-one matching: pairs with IoU strictly above the threshold are
// taken in order of decreasing IoU (ties: earlier gold start, then earlier
// prediction start), skipping pairs whose members are already matched.
inline MatchResult MatchSegments(std::span<const Interval> pred, std::span<const Interval> gold,
                                 const EvalConfig& cfg = {}) {
  struct Pair {
    double iou;
    std::size_t p, g;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < pred.size(); ++p)
    for (std::size_t g = 0; g < gold.size(); ++g) {
      const double v = Iou(pred[p], gold[g]);
      if (v > cfg.iou_threshold) pairs.push_back({v, p, g});
    }
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    return std::make_tuple(-a.iou, gold[a.g].start, pred[a.p].start, a.g, a.p) <
           std::make_tuple(-b.iou, gold[b.g].start, pred[b.p].start, b.g, b.p);
  });
  std::vector<bool> pred_used(pred.size(), false), gold_used(gold.size(), false);
  MatchResult out;
  for (const auto& pr : pairs) {
    if (pred_used[pr.p] || gold_used[pr.g]) continue;
    pred_used[pr.p] = gold_used[pr.g] = true;
    out.true_positives.emplace_back(pr.p, pr.g);
  }
  for (std::size_t p = 0; p < pred.size(); ++p)
    if (!pred_used[p]) out.false_positives.push_back(p);
  for (std::size_t g = 0; g < gold.size(); ++g)
    if (!gold_used[g]) out.false_negatives.push_back(g);
  return out;
}

// ---------------------------------------------------------------------------
// Segment evaluation

struct SegmentReport {
  double iou_threshold = 0.2;
  Counts total;  // micro over all videos
  std::map<std::string, Counts> by_language;
  std::size_t videos = 0;
};

// `manifest` (optional) supplies languages; without it everything is "all".
inline SegmentReport EvalSegments(const std::vector<LaughterSegment>& pred,
                                  const std::vector<LaughterSegment>& gold,
                                  const EvalConfig& cfg = {},
                                  const std::vector<VideoRecord>* manifest = nullptr) {
  cfg.Validate();
  std::map<std::string, std::string> language;
  if (manifest != nullptr)
    for (const auto& v : *manifest) language[v.video_id] = v.language;

  std::map<std::string, std::pair<std::vector<Interval>, std::vector<Interval>>> per_video;
  for (const auto& l : pred) per_video[l.video_id].first.push_back({l.start_s, l.end_s});
  for (const auto& l : gold) per_video[l.video_id].second.push_back({l.start_s, l.end_s});

  SegmentReport report;
  report.iou_threshold = cfg.iou_threshold;
  for (const auto& [id, lists] : per_video) {
    std::string lang = "all";
    if (manifest != nullptr) {
      auto it = language.find(id);
      if (it == language.end())
        throw ValidationError("segments reference unknown video_id \"" + id + "\"");
      lang = it->second;
    }
    const auto counts = MatchSegments(lists.first, lists.second, cfg).counts();
    report.by_language[lang] += counts;
    report.total += counts;
    ++report.videos;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Token evaluation

struct TokenReport {
  std::map<std::string, Counts> by_language;
  Counts total;
  // Arithmetic means of the per-language scores.
  double avg_precision = 0.0;
  double avg_recall = 0.0;
  double avg_f1 = 0.0;
  std::size_t videos = 0;
};

inline TokenReport EvalTokens(const std::vector<LabeledSequence>& pred,
                              const std::vector<LabeledSequence>& gold) {
  std::map<std::string, const LabeledSequence*> pred_by_id;
  for (const auto& s : pred) pred_by_id[s.video_id] = &s;
  if (pred.size() != gold.size()) {
    for (const auto& g : gold)
      if (!pred_by_id.count(g.video_id))
        throw ValidationError("prediction missing for video \"" + g.video_id + "\"");
    throw ValidationError("predictions contain videos absent from gold");
  }
  TokenReport report;
  for (const auto& g : gold) {
    auto it = pred_by_id.find(g.video_id);
    if (it == pred_by_id.end())
      throw ValidationError("prediction missing for video \"" + g.video_id + "\"");
    const auto& p = *it->second;
    if (p.tokens != g.tokens) {
      std::size_t at = 0;
      while (at < p.tokens.size() && at < g.tokens.size() && p.tokens[at] == g.tokens[at]) ++at;
      throw ValidationError("token sequences diverge in video \"" + g.video_id + "\" at token " +
                            std::to_string(at));
    }
    Counts c;
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
      c.tp += g.labels[i] == 1 && p.labels[i] == 1;
      c.fp += g.labels[i] == 0 && p.labels[i] == 1;
      c.fn += g.labels[i] == 1 && p.labels[i] == 0;
    }
    report.by_language[g.language] += c;
    report.total += c;
    ++report.videos;
  }
  if (!report.by_language.empty()) {
    for (const auto& [lang, c] : report.by_language) {
      report.avg_precision += c.precision();
      report.avg_recall += c.recall();
      report.avg_f1 += c.f1();
    }
    const auto n = static_cast<double>(report.by_language.size());
    report.avg_precision /= n;
    report.avg_recall /= n;
    report.avg_f1 /= n;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reports

inline ojson CountsJson(const Counts& c) {
  return ojson{{"tp", c.tp},
               {"fp", c.fp},
               {"fn", c.fn},
               {"precision", c.precision()},
               {"recall", c.recall()},
               {"f1", c.f1()}};
}

inline ojson SegmentReportJson(const SegmentReport& r) {
  ojson j;
  j["iou_threshold"] = r.iou_threshold;
  j["matching"] = "greedy_descending_iou_one_to_one";
  j["averaging"] = "micro";
  j["videos"] = r.videos;
  j["total"] = CountsJson(r.total);
  ojson langs = ojson::object();
  for (const auto& [lang, c] : r.by_language) langs[lang] = CountsJson(c);
  j["by_language"] = std::move(langs);
  return j;
}

inline ojson TokenReportJson(const TokenReport& r) {
  ojson j;
  j["videos"] = r.videos;
  j["positive_class"] = 1;
  j["micro"] = CountsJson(r.total);
  ojson langs = ojson::object();
  for (const auto& [lang, c] : r.by_language) langs[lang] = CountsJson(c);
  j["by_language"] = std::move(langs);
  j["avg"] = {{"precision", r.avg_precision}, {"recall", r.avg_recall}, {"f1", r.avg_f1}};
  return j;
}

}  // namespace laughtrack
