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

// Deterministic synthetic stand-up corpus with planted ground truth.
//
// Each video is a run of short words. After some words an event is planted
// and both transcripts absorb it the way real ASR output does: A stretches the
// preceding word to the event end, B pulls the following word back to the
// event start. Event kinds:
//   missed    laughter the detector did not find (a mining target)
//   detected  laughter already in the detector track (must not be re-mined)
//   noise     non-laughter (applause-like noise), mined but acoustically "other"
// Audio renders words as harmonic tones, laughter as voiced "ha" bursts at
// 4.5-6 Hz and noise events as unmodulated broadband noise.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "laughtrack/classifier.hpp"
#include "laughtrack/corpus.hpp"
#include "laughtrack/features.hpp"
#include "laughtrack/forest.hpp"
#include "laughtrack/io.hpp"
#include "laughtrack/wav.hpp"

namespace laughtrack::synthetic {

enum class EventKind { kMissed, kDetected, kNoise };

struct Config {
  std::size_t videos = 6;
  std::size_t words_per_video = 60;
  std::size_t missed_laughs = 3;
  std::size_t detected_laughs = 2;
  std::size_t noise_events = 1;
  std::size_t b_fillers = 2;
  double substitution_rate = 0.05;
  int sample_rate = 16000;
  bool audio = true;
  std::uint64_t seed = 7;
};

struct Event {
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  EventKind kind = EventKind::kMissed;
  std::size_t after_word = 0;
};

struct Corpus {
  std::vector<VideoRecord> manifest;
  std::vector<Word> words_a;
  std::vector<Word> words_b;
  std::vector<LaughterSegment> detector;  // detected laughs only
  std::vector<LaughterSegment> gold;      // every real laugh, source=manual
  std::vector<Event> events;
  std::map<std::string, std::vector<float>> audio;
  int sample_rate = 16000;

  // Mining targets: missed laughs -> laughter, noise events -> other.
  std::map<SegmentKey, Label> CandidateLabels() const {
    std::map<SegmentKey, Label> out;
    for (const auto& e : events) {
      if (e.kind == EventKind::kDetected) continue;
      out[SegmentKey::Of(e.video_id, e.start_s, e.end_s)] =
          e.kind == EventKind::kMissed ? Label::kLaughter : Label::kOther;
    }
    return out;
  }

  std::size_t Planted(EventKind kind) const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                  [&](const Event& e) { return e.kind == kind; }));
  }
};

namespace detail {

inline const std::vector<std::string>& Vocabulary() {
  static const std::vector<std::string> v = {
      "so",    "my",     "mother", "said",  "no",     "way",   "and",    "then",  "he",
      "was",   "like",   "très",   "bien",  "qué",    "pasa",  "però",   "já",    "ahoj",
      "igen",  "people", "always", "ask",   "me",     "why",   "dating", "is",    "hard",
      "Paris", "naïve",  "señor",  "čau",   "köszi",  "grazie", "obrigado", "you", "know",
      "right", "okay",   "story",  "time"};
  return v;
}

inline double Round(double t) { return RoundMillis(t); }

class Synth {
 public:
  Synth(std::vector<float>& buf, int sr, SplitMix64& rng) : buf_(buf), sr_(sr), rng_(rng) {}

  double Gauss() {
    const double u1 = std::max(rng_.Uniform(), 1e-12), u2 = rng_.Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  void Word(double t0, double t1) {
    const double f0 = 110.0 + 110.0 * rng_.Uniform();
    Each(t0, t1, [&](double t, double u) {
      double s = 0.0;
      for (int h = 1; h <= 5; ++h) s += std::sin(2 * std::numbers::pi * f0 * h * t) / h;
      return 0.25 * Fade(u, t1 - t0) * s / 2.3;
    });
  }

  void Laughter(double t0, double t1) {
    const double rate = 4.5 + 1.5 * rng_.Uniform();
    const double f0 = 260.0 + 100.0 * rng_.Uniform();
    Each(t0, t1, [&](double t, double u) {
      const double phase = std::fmod((t - t0) * rate, 1.0);
      const double env = phase < 0.55 ? std::sin(std::numbers::pi * phase / 0.55) : 0.0;
      double voiced = 0.0;
      for (int h = 1; h <= 4; ++h) voiced += std::sin(2 * std::numbers::pi * f0 * h * t) / h;
      return 0.35 * Fade(u, t1 - t0) * env * (0.6 * voiced / 2.1 + 0.4 * 0.3 * Gauss());
    });
  }

  void Noise(double t0, double t1) {
    Each(t0, t1, [&](double, double u) { return 0.12 * Fade(u, t1 - t0) * Gauss(); });
  }

  void Floor(double level) {
    for (auto& s : buf_) s += static_cast<float>(level * Gauss());
  }

 private:
  static double Fade(double u, double len) {
    const double ramp = std::min(0.01, len / 4);
    const double d = std::min(u, len - u);
    return d >= ramp ? 1.0 : std::max(0.0, d / ramp);
  }

  template <typename Fn>
  void Each(double t0, double t1, Fn fn) {
    const auto a = static_cast<std::size_t>(std::max(0.0, std::floor(t0 * sr_)));
    const auto b = std::min(buf_.size(), static_cast<std::size_t>(std::ceil(t1 * sr_)));
    for (std::size_t i = a; i < b; ++i) {
      const double t = static_cast<double>(i) / sr_;
      buf_[i] += static_cast<float>(fn(t, t - t0));
    }
  }

  std::vector<float>& buf_;
  int sr_;
  SplitMix64& rng_;
};

}  // namespace detail

inline Corpus Generate(const Config& cfg) {
  Corpus c;
  c.sample_rate = cfg.sample_rate;
  const auto& vocab = detail::Vocabulary();
  const std::size_t n_events = cfg.missed_laughs + cfg.detected_laughs + cfg.noise_events;
  const std::size_t W = cfg.words_per_video;
  if (W < 4 * n_events + 6) throw ValidationError("words_per_video too small for planted events");

  for (std::size_t v = 0; v < cfg.videos; ++v) {
    SplitMix64 rng(DeriveSeed(cfg.seed, v));
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "vid%03zu", v);
    const std::string id = id_buf;

    // Event slots: word boundaries at least 3 words apart, away from the ends.
    std::set<std::size_t> slots;
    while (slots.size() < n_events) {
      const auto i = 2 + static_cast<std::size_t>(rng.Below(W - 5));
      bool clear = true;
      for (auto s : slots) clear = clear && (i > s ? i - s : s - i) >= 3;
      if (clear) slots.insert(i);
    }
    std::vector<EventKind> kinds;
    kinds.insert(kinds.end(), cfg.missed_laughs, EventKind::kMissed);
    kinds.insert(kinds.end(), cfg.detected_laughs, EventKind::kDetected);
    kinds.insert(kinds.end(), cfg.noise_events, EventKind::kNoise);
    for (std::size_t i = 0; i + 1 < kinds.size(); ++i)
      std::swap(kinds[i], kinds[i + static_cast<std::size_t>(rng.Below(kinds.size() - i))]);
    std::map<std::size_t, EventKind> event_after;
    {
      std::size_t k = 0;
      for (auto s : slots) event_after[s] = kinds[k++];
    }
    // Gaps that will host a B-only filler word.
    std::set<std::size_t> filler_after;
    while (filler_after.size() < cfg.b_fillers) {
      const auto i = 1 + static_cast<std::size_t>(rng.Below(W - 2));
      bool clear = !event_after.count(i) && !event_after.count(i - 1) && !event_after.count(i + 1);
      if (clear) filler_after.insert(i);
    }

    std::vector<Word> a, b;
    std::vector<Event> events;
    std::vector<std::pair<double, double>> filler_spans;
    double t = detail::Round(0.3 + 0.2 * rng.Uniform());
    for (std::size_t i = 0; i < W; ++i) {
      Word w;
      w.video_id = id;
      w.idx = static_cast<std::int64_t>(i);
      w.token = vocab[static_cast<std::size_t>(rng.Below(vocab.size()))];
      w.start_s = t;
      w.end_s = detail::Round(t + 0.25 + 0.15 * rng.Uniform());
      t = w.end_s;
      a.push_back(w);
      if (auto it = event_after.find(i); it != event_after.end()) {
        Event e;
        e.video_id = id;
        e.kind = it->second;
        e.after_word = i;
        e.start_s = detail::Round(t + 0.05 + 0.1 * rng.Uniform());
        const double len = e.kind == EventKind::kNoise ? 1.0 + 1.0 * rng.Uniform()
                                                       : 1.0 + 2.0 * rng.Uniform();
        e.end_s = detail::Round(e.start_s + len);
        t = detail::Round(e.end_s + 0.05 + 0.1 * rng.Uniform());
        events.push_back(e);
      } else if (filler_after.count(i)) {
        filler_spans.emplace_back(detail::Round(t + 0.03), detail::Round(t + 0.13));
        t = detail::Round(t + 0.2);
      } else {
        t = detail::Round(t + 0.05 + 0.1 * rng.Uniform());
      }
    }
    const double duration = detail::Round(t + 0.5);

    // Transcript B: same words, event-adjacent timestamps shifted, a few
    // spelling substitutions and filler insertions.
    std::set<std::size_t> flank;
    for (const auto& e : events) {
      flank.insert(e.after_word);
      flank.insert(e.after_word + 1);
    }
    const std::vector<Word> spoken = a;
    std::vector<Word> b_raw = a;
    for (std::size_t i = 0; i < W; ++i) {
      if (!flank.count(i) && rng.Uniform() < cfg.substitution_rate) b_raw[i].token += "h";
    }
    for (const auto& e : events) {
      a[e.after_word].end_s = e.end_s;
      b_raw[e.after_word + 1].start_s = e.start_s;
    }
    {
      std::size_t f = 0;
      for (std::size_t i = 0; i < W; ++i) {
        b.push_back(b_raw[i]);
        if (filler_after.count(i)) {
          Word filler{id, 0, "uh", filler_spans[f].first, filler_spans[f].second};
          ++f;
          b.push_back(filler);
        }
      }
      for (std::size_t i = 0; i < b.size(); ++i) b[i].idx = static_cast<std::int64_t>(i);
    }

    VideoRecord rec;
    rec.video_id = id;
    rec.language = std::string(kLanguages[v % kLanguages.size()]);
    rec.channel = "Synthetic " + rec.language;
    rec.duration_s = duration;
    rec.split = (v % 3 == 2) ? Split::kTest : Split::kTrain;
    c.manifest.push_back(rec);

    for (const auto& e : events) {
      if (e.kind == EventKind::kDetected)
        c.detector.push_back({id, e.start_s, e.end_s, LaughterSource::kDetector, 0.9});
      if (e.kind != EventKind::kNoise)
        c.gold.push_back({id, e.start_s, e.end_s, LaughterSource::kManual, std::nullopt});
    }

    if (cfg.audio) {
      std::vector<float> buf(static_cast<std::size_t>(std::ceil(duration * cfg.sample_rate)), 0.0f);
      detail::Synth synth(buf, cfg.sample_rate, rng);
      synth.Floor(0.002);
      for (const auto& w : spoken) synth.Word(w.start_s, w.end_s);
      for (const auto& e : events) {
        if (e.kind == EventKind::kNoise) synth.Noise(e.start_s, e.end_s);
        else synth.Laughter(e.start_s, e.end_s);
      }
      c.audio[id] = std::move(buf);
    }

    c.words_a.insert(c.words_a.end(), a.begin(), a.end());
    c.words_b.insert(c.words_b.end(), b.begin(), b.end());
    c.events.insert(c.events.end(), events.begin(), events.end());
  }
  return c;
}

// Writes the corpus as a fixture directory:
//   manifest.jsonl words_a.jsonl words_b.jsonl laughter.jsonl gold.jsonl
//   candidate_labels.csv audio/<video_id>.wav
inline void Write(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SaveManifest(dir / "manifest.jsonl", c.manifest);
  SaveWords(dir / "words_a.jsonl", c.words_a);
  SaveWords(dir / "words_b.jsonl", c.words_b);
  SaveLaughter(dir / "laughter.jsonl", c.detector);
  SaveLaughter(dir / "gold.jsonl", c.gold);
  {
    std::ofstream out(dir / "candidate_labels.csv", std::ios::binary);
    WriteSegmentLabels(out, c.CandidateLabels());
  }
  for (const auto& [id, samples] : c.audio)
    WriteWav(dir / "audio" / (id + ".wav"), samples, c.sample_rate);
}

}  // namespace laughtrack::synthetic
