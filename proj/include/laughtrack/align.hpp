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

// Dual-transcript laughter mining.
//
// Two ASR systems disagree about where an unrecognized laughter goes: system A
// stretches the word *before* the laughter over it, system B stretches the
// word *after* it. Where an anomalously long A word overlaps an anomalously
// long B word that follows its counterpart, the overlap is the laughter:
//
//            word1            [laugh]           word2
//   A     t0(w1) ----------------- t1(w1)     t0(w2) t1(w2)
//   B     t0'(w1) t1'(w1)  t0'(w2) ---------------- t1'(w2)
//   out   t0'(w1) t1'(w1)  [t0'(w2), t1(w1)]  t0(w2) t1(w2)
//
// The previous word takes B's timestamps and the next word keeps A's.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "laughtrack/corpus.hpp"
#include "laughtrack/error.hpp"
#include "laughtrack/io.hpp"
#include "laughtrack/parallel.hpp"

namespace laughtrack {

// ---------------------------------------------------------------------------
// Token alignment

// Lower-cases ASCII, Latin-1 and Latin Extended-A letters in a UTF-8 string,
// which covers the seven corpus languages. Other code points pass through.
inline std::string CaseFold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  auto put = [&out](char32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  };
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c >= 0x80 && c < 0xC0) {  // stray continuation byte
      out += static_cast<char>(c);
      ++i;
      continue;
    }
    std::size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    if (i + len > s.size()) {  // truncated sequence: copy bytes verbatim
      out.append(s.substr(i));
      break;
    }
    for (std::size_t k = 1; k < len; ++k)
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    if (cp >= 'A' && cp <= 'Z') {
      cp += 0x20;
    } else if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
      cp += 0x20;
    } else if (cp >= 0x100 && cp <= 0x17F) {
      // Latin Extended-A alternates upper/lower, with the parity flipping in
      // 0x139-0x148 and 0x179-0x17E.
      const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
      if (cp == 0x178) cp = 0xFF;
      else if (cp != 0x130 && cp != 0x131 && cp != 0x138 && cp != 0x149 && cp != 0x17F) {
        if (odd_upper ? (cp % 2 == 1) : (cp % 2 == 0)) cp += 1;
      }
    }
    put(cp);
    i += len;
  }
  return out;
}

enum class AlignOp { kMatch, kSubstitute, kInsertA, kInsertB };

inline std::string_view ToString(AlignOp op) {
  switch (op) {
    case AlignOp::kMatch: return "match";
    case AlignOp::kSubstitute: return "substitute";
    case AlignOp::kInsertA: return "insert_a";
    case AlignOp::kInsertB: return "insert_b";
  }
  return "match";
}

struct AlignedPair {
  std::optional<std::size_t> a_idx;
  std::optional<std::size_t> b_idx;
  AlignOp op = AlignOp::kMatch;

  bool operator==(const AlignedPair&) const = default;
};

// Minimum edit-distance alignment of two token lists (case-folded; match 0,
// substitution/insertion/deletion 1). Among optimal alignments the traceback
// prefers match, then substitute, then insert_a, then insert_b.
inline std::vector<AlignedPair> AlignTokens(std::span<const std::string> a,
                                            std::span<const std::string> b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::string> fa, fb;
  fa.reserve(n);
  fb.reserve(m);
  for (const auto& t : a) fa.push_back(CaseFold(t));
  for (const auto& t : b) fb.push_back(CaseFold(t));

  const std::size_t cols = m + 1;
  std::vector<std::uint32_t> cost((n + 1) * cols);
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return cost[i * cols + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = at(i - 1, j - 1) + (fa[i - 1] == fb[j - 1] ? 0u : 1u);
      at(i, j) = std::min({diag, at(i - 1, j) + 1u, at(i, j - 1) + 1u});
    }
  }

  std::vector<AlignedPair> pairs;
  pairs.reserve(n + m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = at(i, j);
    if (i > 0 && j > 0) {
      const bool same = fa[i - 1] == fb[j - 1];
      if (at(i - 1, j - 1) + (same ? 0u : 1u) == here) {
        pairs.push_back({i - 1, j - 1, same ? AlignOp::kMatch : AlignOp::kSubstitute});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i - 1, j) + 1 == here) {
      pairs.push_back({i - 1, std::nullopt, AlignOp::kInsertA});
      --i;
      continue;
    }
    pairs.push_back({std::nullopt, j - 1, AlignOp::kInsertB});
    --j;
  }
  std::reverse(pairs.begin(), pairs.end());
  return pairs;
}

inline std::vector<AlignedPair> AlignTokens(std::span<const Word> a, std::span<const Word> b) {
  std::vector<std::string> ta, tb;
  ta.reserve(a.size());
  tb.reserve(b.size());
  for (const auto& w : a) ta.push_back(w.token);
  for (const auto& w : b) tb.push_back(w.token);
  return AlignTokens(std::span<const std::string>(ta), std::span<const std::string>(tb));
}

inline std::size_t AlignmentCost(std::span<const AlignedPair> pairs) {
  return static_cast<std::size_t>(std::count_if(
      pairs.begin(), pairs.end(), [](const AlignedPair& p) { return p.op != AlignOp::kMatch; }));
}

// ---------------------------------------------------------------------------
// Anomalous words

struct AnomalyConfig {
  double abs_dur_s = 0.8;
  double rel_factor = 3.0;
};

inline double MedianDuration(std::span<const Word> words) {
  if (words.empty()) return 0.0;
  std::vector<double> d;
  d.reserve(words.size());
  for (const auto& w : words) d.push_back(w.duration());
  std::sort(d.begin(), d.end());
  const std::size_t mid = d.size() / 2;
  return d.size() % 2 == 1 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
}

// Indices of words lasting longer than max(abs_dur_s, rel_factor * m), where m
// is the median duration of the other words in the transcript (0 when there
// are none).
inline std::vector<std::size_t> FindAnomalousWords(std::span<const Word> words,
                                                   const AnomalyConfig& cfg = {}) {
  std::vector<std::size_t> out;
  const std::size_t n = words.size();
  if (n == 0) return out;
  std::vector<double> sorted;
  sorted.reserve(n);
  for (const auto& w : words) sorted.push_back(w.duration());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = n - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = words[i].duration();
    double median = 0.0;
    if (m > 0) {
      // Drop one copy of d from the sorted list and read the median around it.
      const auto rank = static_cast<std::size_t>(
          std::lower_bound(sorted.begin(), sorted.end(), d) - sorted.begin());
      auto at = [&](std::size_t k) { return sorted[k < rank ? k : k + 1]; };
      median = m % 2 == 1 ? at(m / 2) : 0.5 * (at(m / 2 - 1) + at(m / 2));
    }
    if (d > std::max(cfg.abs_dur_s, cfg.rel_factor * median)) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidate extraction

struct MiningConfig {
  AnomalyConfig anomaly;
  double min_candidate_dur = 0.5;
  double max_existing_overlap = 0.5;
};

struct DualTranscript {
  std::string video_id;
  std::vector<Word> words_a;  // laughter merged into the previous word
  std::vector<Word> words_b;  // laughter merged into the next word
};

struct CandidateLaughter {
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::int64_t prev_word_idx = 0;
  std::int64_t next_word_idx = 0;
  double corrected_prev_end_s = 0.0;
  double corrected_next_start_s = 0.0;

  double duration() const { return end_s - start_s; }
  bool operator==(const CandidateLaughter&) const = default;
};

struct ExtractionResult {
  std::vector<CandidateLaughter> candidates;
  std::vector<Word> corrected_words;
  std::size_t anomalous_a = 0;
  std::size_t anomalous_b = 0;
  // Intersections dropped because correcting the flanking words would break
  // ordering or overlap another emitted interval.
  std::size_t dropped_unrepairable = 0;
};

namespace detail {

inline void CheckTranscript(const std::vector<Word>& words, const std::string& video_id,
                            const char* which) {
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (w.video_id != video_id)
      throw ValidationError(std::string("transcript ") + which + " of video \"" + video_id +
                            "\" contains a word of video \"" + w.video_id + "\"");
    if (w.end_s < w.start_s || w.start_s < 0)
      throw ValidationError(std::string("transcript ") + which + " of video \"" + video_id +
                            "\": invalid interval at position " + std::to_string(i));
    if (i > 0 && w.start_s < words[i - 1].start_s)
      throw ValidationError(std::string("transcript ") + which + " of video \"" + video_id +
                            "\" is not sorted by start_s at position " + std::to_string(i));
  }
}

}  // namespace detail

inline ExtractionResult ExtractCandidates(const DualTranscript& dual,
                                          std::span<const LaughterSegment> existing,
                                          const MiningConfig& cfg = {}) {
  const auto& a = dual.words_a;
  const auto& b = dual.words_b;
  detail::CheckTranscript(a, dual.video_id, "A");
  detail::CheckTranscript(b, dual.video_id, "B");
  for (std::size_t i = 1; i < existing.size(); ++i) {
    if (existing[i].video_id == existing[i - 1].video_id &&
        existing[i].start_s < existing[i - 1].start_s)
      throw ValidationError("existing laughter is not sorted by start_s");
  }

  ExtractionResult result;
  result.corrected_words = a;
  const auto anomalous_a = FindAnomalousWords(a, cfg.anomaly);
  const auto anomalous_b = FindAnomalousWords(b, cfg.anomaly);
  result.anomalous_a = anomalous_a.size();
  result.anomalous_b = anomalous_b.size();
  if (anomalous_a.empty() || anomalous_b.empty()) return result;

  std::vector<bool> is_anomalous_b(b.size(), false);
  for (auto k : anomalous_b) is_anomalous_b[k] = true;

  const auto pairs = AlignTokens(std::span<const Word>(a), std::span<const Word>(b));
  // Position of each A word inside the pair list.
  std::vector<std::size_t> pair_of_a(a.size());
  for (std::size_t p = 0; p < pairs.size(); ++p)
    if (pairs[p].a_idx) pair_of_a[*pairs[p].a_idx] = p;

  std::vector<std::pair<double, double>> taken;
  for (const auto& l : existing)
    if (l.video_id == dual.video_id) taken.emplace_back(l.start_s, l.end_s);

  auto& corrected = result.corrected_words;
  std::vector<std::pair<double, double>> emitted;
  constexpr double kEps = 1e-9;

  for (const std::size_t i : anomalous_a) {
    if (i + 1 >= a.size()) continue;
    const auto& prev = a[i];
    const std::size_t p = pair_of_a[i];
    const std::optional<std::size_t> counterpart = pairs[p].b_idx;

    // B words after the counterpart of A[i], up to the counterpart of A[i+1].
    std::optional<std::size_t> hit;
    for (std::size_t q = p + 1; q < pairs.size() && !hit; ++q) {
      const auto& pair = pairs[q];
      if (pair.b_idx) {
        const auto k = *pair.b_idx;
        if (is_anomalous_b[k] && IntervalsOverlap(prev.start_s, prev.end_s, b[k].start_s, b[k].end_s))
          hit = k;
      }
      if (pair.a_idx && *pair.a_idx == i + 1) break;
    }
    if (!hit) continue;

    const double start = std::max(prev.start_s, b[*hit].start_s);
    const double end = std::min(prev.end_s, b[*hit].end_s);
    const double length = end - start;
    if (length + kEps < cfg.min_candidate_dur) continue;
    const bool novel = std::all_of(taken.begin(), taken.end(), [&](const auto& t) {
      return OverlapLength(start, end, t.first, t.second) <
             cfg.max_existing_overlap * length;
    });
    if (!novel) continue;

    Word new_prev = corrected[i];
    if (counterpart) {
      new_prev.start_s = b[*counterpart].start_s;
      new_prev.end_s = b[*counterpart].end_s;
    }
    new_prev.end_s = std::min(new_prev.end_s, start);
    new_prev.start_s = std::min(new_prev.start_s, new_prev.end_s);
    Word new_next = corrected[i + 1];
    new_next.start_s = std::max(new_next.start_s, end);
    new_next.end_s = std::max(new_next.end_s, new_next.start_s);

    bool ok = new_prev.start_s >= 0.0;
    if (i > 0) ok = ok && corrected[i - 1].start_s <= new_prev.start_s;
    if (i + 2 < corrected.size()) ok = ok && new_next.start_s <= corrected[i + 2].start_s;
    for (std::size_t w = 0; ok && w < corrected.size(); ++w) {
      if (w == i || w == i + 1) continue;
      ok = !IntervalsOverlap(corrected[w].start_s, corrected[w].end_s, start, end);
    }
    for (const auto& e : emitted) {
      if (!ok) break;
      ok = !IntervalsOverlap(new_prev.start_s, new_prev.end_s, e.first, e.second) &&
           !IntervalsOverlap(new_next.start_s, new_next.end_s, e.first, e.second);
    }
    if (!ok) {
      ++result.dropped_unrepairable;
      continue;
    }

    corrected[i] = new_prev;
    corrected[i + 1] = new_next;
    emitted.emplace_back(start, end);
    taken.emplace_back(start, end);
    result.candidates.push_back({dual.video_id, start, end, prev.idx, a[i + 1].idx,
                                 new_prev.end_s, new_next.start_s});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Corpus mining

enum class MineStatus { kOk, kMissingTranscript };

struct MineVideoReport {
  std::string video_id;
  MineStatus status = MineStatus::kOk;
  std::size_t words_a = 0;
  std::size_t words_b = 0;
  std::size_t anomalous_a = 0;
  std::size_t anomalous_b = 0;
  std::size_t candidates = 0;
  std::size_t dropped_unrepairable = 0;
};

struct MiningResult {
  std::vector<CandidateLaughter> candidates;
  std::vector<Word> corrected_words;
  std::vector<MineVideoReport> report;

  std::size_t skipped() const {
    return static_cast<std::size_t>(std::count_if(report.begin(), report.end(), [](const auto& r) {
      return r.status != MineStatus::kOk;
    }));
  }
};

// Builds per-video dual transcripts from two flat word lists.
inline std::map<std::string, DualTranscript> PairTranscripts(const std::vector<Word>& words_a,
                                                             const std::vector<Word>& words_b) {
  std::map<std::string, DualTranscript> out;
  for (const auto& w : words_a) {
    auto& d = out[w.video_id];
    d.video_id = w.video_id;
    d.words_a.push_back(w);
  }
  for (const auto& w : words_b) {
    auto& d = out[w.video_id];
    d.video_id = w.video_id;
    d.words_b.push_back(w);
  }
  return out;
}

// Videos are processed independently (on up to `jobs` threads); outputs follow
// manifest order. A manifest video without both transcripts is skipped and
// reported.
inline MiningResult MineCorpus(const std::vector<VideoRecord>& manifest,
                               const std::map<std::string, DualTranscript>& transcripts,
                               const std::vector<LaughterSegment>& existing,
                               const MiningConfig& cfg = {}, unsigned jobs = 1) {
  std::set<std::string> known;
  for (const auto& v : manifest) known.insert(v.video_id);
  for (const auto& [id, dual] : transcripts)
    if (!known.count(id))
      throw ValidationError("transcript references unknown video_id \"" + id + "\"");

  auto by_video = GroupByVideo(existing);
  for (auto& [id, laughs] : by_video) SortByStart(laughs);

  std::vector<ExtractionResult> per_video(manifest.size());
  std::vector<MineVideoReport> report(manifest.size());
  ParallelFor(manifest.size(), jobs, [&](std::size_t v) {
    const auto& id = manifest[v].video_id;
    auto& r = report[v];
    r.video_id = id;
    auto it = transcripts.find(id);
    if (it == transcripts.end() || it->second.words_a.empty() || it->second.words_b.empty()) {
      r.status = MineStatus::kMissingTranscript;
      if (it != transcripts.end()) per_video[v].corrected_words = it->second.words_a;
      return;
    }
    static const std::vector<LaughterSegment> kNone;
    auto laughs = by_video.find(id);
    const auto& prior = laughs == by_video.end() ? kNone : laughs->second;
    per_video[v] = ExtractCandidates(it->second, prior, cfg);
    r.words_a = it->second.words_a.size();
    r.words_b = it->second.words_b.size();
    r.anomalous_a = per_video[v].anomalous_a;
    r.anomalous_b = per_video[v].anomalous_b;
    r.candidates = per_video[v].candidates.size();
    r.dropped_unrepairable = per_video[v].dropped_unrepairable;
  });

  MiningResult out;
  out.report = std::move(report);
  for (auto& r : per_video) {
    out.candidates.insert(out.candidates.end(), r.candidates.begin(), r.candidates.end());
    out.corrected_words.insert(out.corrected_words.end(), r.corrected_words.begin(),
                               r.corrected_words.end());
  }
  return out;
}

inline ojson MiningReportJson(const MiningResult& r) {
  ojson j;
  std::size_t total = 0;
  ojson videos = ojson::array();
  for (const auto& v : r.report) {
    ojson e;
    e["video_id"] = v.video_id;
    e["status"] = v.status == MineStatus::kOk ? "ok" : "missing_transcript";
    e["words_a"] = v.words_a;
    e["words_b"] = v.words_b;
    e["anomalous_a"] = v.anomalous_a;
    e["anomalous_b"] = v.anomalous_b;
    e["candidates"] = v.candidates;
    e["dropped_unrepairable"] = v.dropped_unrepairable;
    total += v.candidates;
    videos.push_back(std::move(e));
  }
  j["videos"] = r.report.size();
  j["skipped"] = r.skipped();
  j["candidates"] = total;
  j["per_video"] = std::move(videos);
  return j;
}

// ---------------------------------------------------------------------------
// candidates.jsonl

inline std::vector<CandidateLaughter> ReadCandidates(std::istream& in,
                                                     const std::string& name = "candidates") {
  std::vector<CandidateLaughter> out;
  detail::ForEachJsonLine(in, name, [&](const nlohmann::json& j, std::size_t line) {
    detail::Fields f(j, name, line);
    CandidateLaughter c;
    c.video_id = f.String("video_id");
    c.start_s = f.Number("start_s");
    c.end_s = f.Number("end_s");
    if (!(c.start_s < c.end_s)) f.Fail("start_s must be < end_s");
    c.prev_word_idx = f.Integer("prev_word_idx");
    c.next_word_idx = f.Integer("next_word_idx");
    c.corrected_prev_end_s = f.Number("corrected_prev_end_s");
    c.corrected_next_start_s = f.Number("corrected_next_start_s");
    out.push_back(std::move(c));
  });
  return out;
}

inline std::vector<CandidateLaughter> LoadCandidates(const std::filesystem::path& path) {
  auto in = detail::OpenIn(path);
  return ReadCandidates(in, path.string());
}

inline void WriteCandidates(std::ostream& out, const std::vector<CandidateLaughter>& cands) {
  for (const auto& c : cands) {
    ojson j;
    j["video_id"] = c.video_id;
    j["start_s"] = RoundMillis(c.start_s);
    j["end_s"] = RoundMillis(c.end_s);
    j["prev_word_idx"] = c.prev_word_idx;
    j["next_word_idx"] = c.next_word_idx;
    j["corrected_prev_end_s"] = RoundMillis(c.corrected_prev_end_s);
    j["corrected_next_start_s"] = RoundMillis(c.corrected_next_start_s);
    detail::WriteLine(out, j);
  }
}

inline void SaveCandidates(const std::filesystem::path& p,
                           const std::vector<CandidateLaughter>& v) {
  SaveJsonl(p, v, [](std::ostream& o, const auto& x) { WriteCandidates(o, x); });
}

}  // namespace laughtrack
