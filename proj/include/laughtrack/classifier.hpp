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

// Two-stage candidate validation: a duration gate, then the forest.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "laughtrack/align.hpp"
#include "laughtrack/corpus.hpp"
#include "laughtrack/error.hpp"
#include "laughtrack/features.hpp"
#include "laughtrack/forest.hpp"
#include "laughtrack/io.hpp"
#include "laughtrack/parallel.hpp"

namespace laughtrack {

inline constexpr double kMinLaughterDuration = 0.5;

enum class Verdict { kPass, kAutoOther };

// Segments shorter than 0.5 s are "other" without consulting the classifier;
// exactly 0.5 s passes.
inline Verdict Verify(double duration_s) {
  return duration_s < kMinLaughterDuration ? Verdict::kAutoOther : Verdict::kPass;
}

inline Verdict Verify(const SegmentKey& key) {
  // Millisecond keys make the comparison exact.
  return key.end_ms - key.start_ms < 500 ? Verdict::kAutoOther : Verdict::kPass;
}

struct LabeledSegment {
  SegmentKey key;
  FeatureVector features;
  Label label = Label::kOther;
};

struct TrainingSet {
  std::vector<Example> examples;
  std::vector<SegmentKey> keys;
  std::size_t auto_other = 0;  // removed by the duration gate
};

// Applies the gate; auto_other segments are neither trained on nor scored.
inline TrainingSet PrepareTrainingSet(std::span<const LabeledSegment> segments) {
  TrainingSet out;
  for (const auto& s : segments) {
    if (Verify(s.key) == Verdict::kAutoOther) {
      ++out.auto_other;
      continue;
    }
    out.examples.push_back({std::vector<double>(s.features.values.begin(), s.features.values.end()),
                            s.label});
    out.keys.push_back(s.key);
  }
  return out;
}

// labels.csv: video_id,start_s,end_s,label  (label: laughter|other|1|0)
inline std::map<SegmentKey, Label> ReadSegmentLabels(std::istream& in,
                                                     const std::string& name = "labels") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name, 1, "missing header");
  const auto header = detail::SplitCsv(detail::StripCr(line));
  const std::vector<std::string> expected = {"video_id", "start_s", "end_s", "label"};
  if (header != expected) throw ParseError(name, 1, "header must be video_id,start_s,end_s,label");
  std::map<SegmentKey, Label> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::StripCr(line);
    if (line.empty()) continue;
    const auto cells = detail::SplitCsv(line);
    if (cells.size() != 4) throw ParseError(name, line_no, "expected 4 cells");
    double start = 0.0, end = 0.0;
    try {
      std::size_t used = 0;
      start = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("trailing");
      end = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(name, line_no, "start_s/end_s must be numbers");
    }
    Label label;
    if (cells[3] == "laughter" || cells[3] == "1") label = Label::kLaughter;
    else if (cells[3] == "other" || cells[3] == "0") label = Label::kOther;
    else throw ParseError(name, line_no, "label must be laughter, other, 1 or 0");
    out[SegmentKey::Of(cells[0], start, end)] = label;
  }
  return out;
}

inline std::map<SegmentKey, Label> LoadSegmentLabels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return ReadSegmentLabels(in, path.string());
}

inline void WriteSegmentLabels(std::ostream& out, const std::map<SegmentKey, Label>& labels) {
  out << "video_id,start_s,end_s,label\n";
  for (const auto& [key, label] : labels)
    out << key.video_id << ',' << detail::FormatDouble(key.start_s()) << ','
        << detail::FormatDouble(key.end_s()) << ',' << ToString(label) << '\n';
}

// Inner join of feature rows and labels; a labeled key without features is an
// error, unlabeled feature rows are ignored.
inline std::vector<LabeledSegment> JoinLabels(const std::vector<FeatureRow>& rows,
                                              const std::map<SegmentKey, Label>& labels) {
  const auto index = IndexFeatures(rows);
  std::vector<LabeledSegment> out;
  for (const auto& [key, label] : labels) {
    auto it = index.find(key);
    if (it == index.end())
      throw ValidationError("no features for labeled segment " + key.video_id + " [" +
                            detail::FormatDouble(key.start_s()) + ", " +
                            detail::FormatDouble(key.end_s()) + "]");
    out.push_back({key, it->second, label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics and repeated-holdout evaluation

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-class metrics for binary labels; undefined ratios are 0.
inline std::array<ClassMetrics, 2> PerClassMetrics(std::span<const Label> truth,
                                                   std::span<const Label> pred) {
  std::array<ClassMetrics, 2> out{};
  for (int c = 0; c < 2; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = static_cast<int>(truth[i]) == c;
      const bool p = static_cast<int>(pred[i]) == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    auto& m = out[static_cast<std::size_t>(c)];
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  return out;
}

struct Interval95 {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

struct CvClassReport {
  Interval95 precision, recall, f1;
};

struct CvReport {
  int iterations = 0;
  std::size_t examples = 0;
  std::size_t holdout = 0;
  CvClassReport other, laughter, macro;
  // Raw per-iteration metrics: [iteration][other, laughter, macro].
  std::vector<std::array<ClassMetrics, 3>> runs;
};

namespace detail {

inline Interval95 Summarize(std::vector<double> v) {
  Interval95 out;
  out.mean = Mean(v);
  out.low = Percentile(v, 2.5);
  out.high = Percentile(v, 97.5);
  return out;
}

}  // namespace detail

// Repeats stratified random holdout splits (holdout_fraction of each class for
// testing), retraining each time, and reports the mean and 2.5/97.5
// percentiles of every metric across iterations.
inline CvReport EvaluateCv(std::span<const Example> data, const ForestConfig& cfg,
                           int iterations = 200, unsigned jobs = 1) {
  cfg.Validate();
  if (iterations < 1) throw ValidationError("iterations must be >= 1");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data[i].y)].push_back(i);
  std::array<std::size_t, 2> n_test{};
  for (std::size_t c = 0; c < 2; ++c) {
    n_test[c] = static_cast<std::size_t>(
        std::llround(cfg.holdout_fraction * static_cast<double>(by_class[c].size())));
    if (n_test[c] < 1 || n_test[c] >= by_class[c].size())
      throw ValidationError("too few " + std::string(ToString(static_cast<Label>(c))) +
                            " examples (" + std::to_string(by_class[c].size()) +
                            ") for a holdout split");
  }

  CvReport report;
  report.iterations = iterations;
  report.examples = data.size();
  report.holdout = n_test[0] + n_test[1];
  report.runs.resize(static_cast<std::size_t>(iterations));
  const std::vector<std::string> names(data.front().x.size(), std::string());

  // Iterations run serially; each forest trains its trees on `jobs` threads.
  for (int it = 0; it < iterations; ++it) {
    SplitMix64 rng(DeriveSeed(cfg.seed, 1'000'000 + static_cast<std::uint64_t>(it)));
    std::vector<Example> train, test;
    for (std::size_t c = 0; c < 2; ++c) {
      auto idx = by_class[c];
      for (std::size_t i = 0; i + 1 < idx.size(); ++i)
        std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.Below(idx.size() - i))]);
      for (std::size_t k = 0; k < idx.size(); ++k)
        (k < n_test[c] ? test : train).push_back(data[idx[k]]);
    }
    ForestConfig run_cfg = cfg;
    run_cfg.seed = DeriveSeed(cfg.seed, 2'000'000 + static_cast<std::uint64_t>(it));
    const auto model = TrainForest(train, names, run_cfg, jobs);
    std::vector<Label> truth, pred;
    for (const auto& e : test) {
      truth.push_back(e.y);
      pred.push_back(model.Predict(e.x).label);
    }
    const auto m = PerClassMetrics(truth, pred);
    ClassMetrics macro{(m[0].precision + m[1].precision) / 2, (m[0].recall + m[1].recall) / 2,
                       (m[0].f1 + m[1].f1) / 2};
    report.runs[static_cast<std::size_t>(it)] = {m[0], m[1], macro};
  }

  auto summarize = [&](std::size_t which) {
    std::vector<double> p, r, f;
    for (const auto& run : report.runs) {
      p.push_back(run[which].precision);
      r.push_back(run[which].recall);
      f.push_back(run[which].f1);
    }
    return CvClassReport{detail::Summarize(p), detail::Summarize(r), detail::Summarize(f)};
  };
  report.other = summarize(0);
  report.laughter = summarize(1);
  report.macro = summarize(2);
  return report;
}

inline ojson CvReportJson(const CvReport& r) {
  auto interval = [](const Interval95& i) {
    return ojson{{"mean", i.mean}, {"ci95_low", i.low}, {"ci95_high", i.high}};
  };
  auto cls = [&](const CvClassReport& c) {
    return ojson{{"precision", interval(c.precision)},
                 {"recall", interval(c.recall)},
                 {"f1", interval(c.f1)}};
  };
  ojson j;
  j["iterations"] = r.iterations;
  j["examples"] = r.examples;
  j["holdout_per_iteration"] = r.holdout;
  j["ci_method"] = "percentile";
  j["other"] = cls(r.other);
  j["laughter"] = cls(r.laughter);
  j["macro"] = cls(r.macro);
  return j;
}

// ---------------------------------------------------------------------------
// Candidate filtering

struct CandidateDecision {
  SegmentKey key;
  Verdict verdict = Verdict::kPass;
  std::optional<Prediction> prediction;  // empty for auto_other
  bool accepted = false;
};

struct FilterResult {
  std::vector<LaughterSegment> accepted;  // source = asr_gap, score = P(laughter)
  std::vector<CandidateDecision> decisions;
};

inline FilterResult FilterCandidates(std::span<const CandidateLaughter> candidates,
                                     const std::map<SegmentKey, FeatureVector>& features,
                                     const ForestModel& model) {
  FilterResult out;
  for (const auto& c : candidates) {
    CandidateDecision d;
    d.key = SegmentKey::Of(c.video_id, c.start_s, c.end_s);
    d.verdict = Verify(d.key);
    if (d.verdict == Verdict::kPass) {
      auto it = features.find(d.key);
      if (it == features.end())
        throw ValidationError("no features for candidate " + c.video_id + " [" +
                              detail::FormatDouble(d.key.start_s()) + ", " +
                              detail::FormatDouble(d.key.end_s()) + "]");
      d.prediction = model.Predict(it->second.values);
      d.accepted = d.prediction->label == Label::kLaughter;
    }
    if (d.accepted) {
      out.accepted.push_back({c.video_id, d.key.start_s(), d.key.end_s(), LaughterSource::kAsrGap,
                              d.prediction->probability});
    }
    out.decisions.push_back(std::move(d));
  }
  return out;
}

// Concatenates laughter tracks and orders them by (video_id, start_s, end_s).
inline std::vector<LaughterSegment> MergeLaughter(std::vector<std::vector<LaughterSegment>> tracks) {
  std::vector<LaughterSegment> out;
  for (auto& t : tracks) out.insert(out.end(), t.begin(), t.end());
  SortByStart(out);
  CheckManualOverlaps(out, "merged laughter");
  return out;
}

}  // namespace laughtrack
