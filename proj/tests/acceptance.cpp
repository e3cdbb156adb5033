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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "laughtrack/align.hpp"
#include "laughtrack/classifier.hpp"
#include "laughtrack/cli.hpp"
#include "laughtrack/digest.hpp"
#include "laughtrack/evaluation.hpp"
#include "laughtrack/features.hpp"
#include "laughtrack/forest.hpp"
#include "laughtrack/labels.hpp"
#include "laughtrack/synthetic.hpp"
#include "oracles.hpp"

namespace lt = laughtrack;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome CorrectionFixture() {
  const auto t0 = Clock::now();
  lt::DualTranscript d{"v", {}, {}};
  d.words_a = {{"v", 0, "we", 0.0, 3.0}, {"v", 1, "go", 3.0, 3.4}};
  d.words_b = {{"v", 0, "we", 0.0, 0.4}, {"v", 1, "go", 0.5, 3.4}};
  const auto r = lt::ExtractCandidates(d, {});
  const std::vector<lt::LaughterSegment> covering = {
      {"v", 0.5, 3.0, lt::LaughterSource::kDetector, std::nullopt}};
  const auto covered = lt::ExtractCandidates(d, covering);
  const double secs = SecondsSince(t0);

  const bool one = r.candidates.size() == 1;
  const bool span = one && r.candidates[0].start_s == 0.5 && r.candidates[0].end_s == 3.0;
  const auto& w = r.corrected_words;
  const bool words = w.size() == 2 && w[0].start_s == 0.0 && w[0].end_s == 0.4 &&
                     w[1].start_s == 3.0 && w[1].end_s == 3.4;
  const bool pass = span && words && covered.candidates.empty() && secs < 1.0;
  return {pass, Fmt("candidate [%.3f, %.3f], word1 [%.3f, %.3f], word2 [%.3f, %.3f], "
                    "covered -> %zu candidates, %.4f s",
                    one ? r.candidates[0].start_s : -1.0, one ? r.candidates[0].end_s : -1.0,
                    w.size() == 2 ? w[0].start_s : -1.0, w.size() == 2 ? w[0].end_s : -1.0,
                    w.size() == 2 ? w[1].start_s : -1.0, w.size() == 2 ? w[1].end_s : -1.0,
                    covered.candidates.size(), secs)};
}

// Words on a 0.05 s grid so that boundaries coincide with laugh endpoints
// often; a few words overlap their predecessor or have zero length.
std::vector<lt::Word> RandomWords(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> gap(0, 8), len(0, 12), back(0, 19);
  std::vector<lt::Word> words;
  double t = 0.05 * gap(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double start = t;
    if (i > 0 && back(rng) == 0) start = std::max(words.back().start_s, t - 0.1);
    const double end = start + 0.05 * len(rng);
    words.push_back({"v", static_cast<std::int64_t>(i), "w", start, end});
    t = std::max(t, end) + 0.05 * gap(rng);
  }
  return words;
}

Outcome LabelOracle() {
  std::mt19937_64 rng(20261016);
  std::size_t mismatches = 0, words_total = 0, laughs_total = 0;
  double lib_secs = 0.0;
  for (int video = 0; video < 1000; ++video) {
    const auto words = RandomWords(rng, std::uniform_int_distribution<std::size_t>(0, 200)(rng));
    const double horizon = words.empty() ? 10.0 : words.back().end_s + 1.0;
    const auto n_laughs = std::uniform_int_distribution<std::size_t>(0, 20)(rng);
    std::uniform_int_distribution<int> grid(0, static_cast<int>(horizon / 0.05));
    std::uniform_int_distribution<int> dur(1, 60);
    std::vector<lt::LaughterSegment> laughs;
    for (std::size_t k = 0; k < n_laughs; ++k) {
      const double s = 0.05 * grid(rng);
      laughs.push_back({"v", s, std::min(horizon, s + 0.05 * dur(rng)),
                        lt::LaughterSource::kManual, std::nullopt});
      if (laughs.back().end_s <= laughs.back().start_s) laughs.back().end_s = s + 0.05;
    }
    std::sort(laughs.begin(), laughs.end(),
              [](const auto& a, const auto& b) { return a.start_s < b.start_s; });

    const auto t0 = Clock::now();
    const auto got = lt::LabelWords(words, laughs, {lt::LabelingScheme::kSpan}, horizon);
    lib_secs += SecondsSince(t0);

    std::vector<oracle::W> ow;
    for (const auto& w : words) ow.push_back({w.start_s, w.end_s});
    std::vector<oracle::L> ol;
    for (const auto& l : laughs) ol.push_back({l.start_s, l.end_s});
    const auto want = oracle::SpanLabels(ow, ol);
    for (std::size_t i = 0; i < want.size(); ++i) mismatches += got[i] != want[i];
    mismatches += got.size() != want.size();
    words_total += words.size();
    laughs_total += laughs.size();
  }
  return {mismatches == 0 && lib_secs < 10.0,
          Fmt("1000 videos, %zu words, %zu laughs, %zu mismatches, %.3f s", words_total,
              laughs_total, mismatches, lib_secs)};
}

Outcome AlignmentOracle() {
  std::mt19937_64 rng(42);
  const std::vector<std::string> vocab = {"the", "The", "THE", "laugh", "Laugh", "uh", "hm",
                                          "très", "señor", "a", "A", "joke", "so", "ok"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1), len(0, 50);
  std::size_t mismatches = 0, invalid = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> a(len(rng)), b;
    for (auto& t : a) t = vocab[pick(rng)];
    // Half the trials derive b from a by random edits so costs stay small.
    if (trial % 2 == 0) {
      for (const auto& t : a) {
        const auto r = std::uniform_int_distribution<int>(0, 9)(rng);
        if (r == 0) continue;
        if (r == 1) b.push_back(vocab[pick(rng)]);
        else b.push_back(t);
        if (r == 2) b.push_back(vocab[pick(rng)]);
      }
      if (b.size() > 50) b.resize(50);
    } else {
      b.resize(len(rng));
      for (auto& t : b) t = vocab[pick(rng)];
    }
    const auto pairs = lt::AlignTokens(std::span<const std::string>(a), std::span<const std::string>(b));
    mismatches += lt::AlignmentCost(pairs) != oracle::EditDistance(a, b);
    // Every token appears exactly once, in order.
    std::size_t ia = 0, ib = 0;
    bool ok = true;
    for (const auto& p : pairs) {
      if (p.a_idx) ok = ok && *p.a_idx == ia++;
      if (p.b_idx) ok = ok && *p.b_idx == ib++;
    }
    invalid += !(ok && ia == a.size() && ib == b.size());
  }
  return {mismatches == 0 && invalid == 0,
          Fmt("500 pairs, %zu cost mismatches, %zu malformed alignments", mismatches, invalid)};
}

Outcome MatchingSuite() {
  std::mt19937_64 rng(7);
  const std::vector<double> thresholds = {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0};
  std::uniform_int_distribution<int> count(0, 8), grid(0, 40), len(1, 12);
  std::size_t failures = 0, sets = 0;
  auto random_set = [&] {
    std::vector<lt::Interval> v(count(rng));
    for (auto& x : v) {
      x.start = 0.25 * grid(rng);
      x.end = x.start + 0.25 * len(rng);
    }
    return v;
  };
  for (int trial = 0; trial < 10000; ++trial, ++sets) {
    const auto pred = random_set();
    const auto gold = random_set();
    for (const auto& p : pred)
      for (const auto& g : gold) {
        const double u = lt::Iou(p, g), v = lt::Iou(g, p);
        failures += u != v;
        failures += !(u >= 0.0 && u <= 1.0);
      }
    std::vector<oracle::I> op, og;
    for (const auto& p : pred) op.push_back({p.start, p.end});
    for (const auto& g : gold) og.push_back({g.start, g.end});
    std::int64_t last_tp = INT64_MAX;
    for (const double th : thresholds) {
      const auto m = lt::MatchSegments(pred, gold, {th});
      const auto c = m.counts();
      failures += static_cast<std::size_t>(c.tp + c.fp) != pred.size();
      failures += static_cast<std::size_t>(c.tp + c.fn) != gold.size();
      failures += c.tp > last_tp;
      last_tp = c.tp;
      std::vector<bool> pu(pred.size()), gu(gold.size());
      for (const auto& [p, g] : m.true_positives) {
        failures += pu[p] || gu[g];
        pu[p] = gu[g] = true;
        failures += !(lt::Iou(pred[p], gold[g]) > th);
      }
      const auto o = oracle::GreedyMatch(op, og, th);
      failures += o.tp != static_cast<std::size_t>(c.tp);
    }
  }
  // pred = gold gives exactly F1 = 1.
  bool identity = true;
  for (int trial = 0; trial < 1000; ++trial) {
    auto gold = random_set();
    if (gold.empty()) gold.push_back({0.0, 1.0});
    identity = identity && lt::MatchSegments(gold, gold, {0.2}).counts().f1() == 1.0;
  }
  const double third = lt::Iou({0.0, 1.0}, {0.5, 1.5});
  const bool exact = std::abs(third - 1.0 / 3.0) <= 1e-9;
  return {failures == 0 && identity && exact,
          Fmt("%zu sets x %zu thresholds, %zu invariant violations, pred=gold F1=1: %s, "
              "IoU([0,1],[0.5,1.5]) = %.12f",
              sets, thresholds.size(), failures, identity ? "yes" : "no", third)};
}

Outcome VerificationGate() {
  // Every millisecond duration from 1 ms to 1000 ms, plus the mined fixture
  // candidates with the duration floor disabled.
  std::vector<lt::CandidateLaughter> cands;
  for (int ms = 1; ms <= 1000; ++ms)
    cands.push_back({"grid", 10.0, 10.0 + ms / 1000.0, 0, 1, 10.0, 10.0 + ms / 1000.0});
  lt::synthetic::Config scfg;
  scfg.audio = false;
  const auto corpus = lt::synthetic::Generate(scfg);
  lt::MiningConfig mcfg;
  mcfg.min_candidate_dur = 0.0;
  const auto mined = lt::MineCorpus(corpus.manifest, lt::PairTranscripts(corpus.words_a, corpus.words_b),
                                    corpus.detector, mcfg, 1);
  cands.insert(cands.end(), mined.candidates.begin(), mined.candidates.end());

  // Every candidate carries features so that only the gate decides.
  std::map<lt::SegmentKey, lt::FeatureVector> features;
  std::vector<lt::LabeledSegment> labeled;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto key = lt::SegmentKey::Of(cands[i].video_id, cands[i].start_s, cands[i].end_s);
    lt::FeatureVector fv;
    fv.values.fill(static_cast<double>(i % 2));
    features[key] = fv;
    labeled.push_back({key, fv, i % 2 ? lt::Label::kLaughter : lt::Label::kOther});
  }
  std::vector<lt::Example> blobs;
  for (int i = 0; i < 20; ++i) {
    lt::FeatureVector fv;
    fv.values.fill(i % 2);
    blobs.push_back({std::vector<double>(fv.values.begin(), fv.values.end()),
                     i % 2 ? lt::Label::kLaughter : lt::Label::kOther});
  }
  lt::ForestConfig fcfg;
  fcfg.n_estimators = 5;
  const auto model = lt::TrainForest(blobs, lt::FeatureNames(), fcfg, 1);
  const auto result = lt::FilterCandidates(cands, features, model);
  const auto set = lt::PrepareTrainingSet(labeled);

  std::size_t short_total = 0, short_gated = 0, long_gated = 0, leaked = 0;
  for (const auto& d : result.decisions) {
    const bool is_short = d.key.end_ms - d.key.start_ms < 500;
    short_total += is_short;
    if (d.verdict == lt::Verdict::kAutoOther) {
      short_gated += is_short;
      long_gated += !is_short;
      leaked += d.accepted || d.prediction.has_value();
    }
  }
  std::size_t short_in_training = 0;
  for (const auto& k : set.keys) short_in_training += k.end_ms - k.start_ms < 500;
  const bool pass = short_total > 0 && short_gated == short_total && long_gated == 0 &&
                    leaked == 0 && short_in_training == 0 && set.auto_other == short_total;
  return {pass, Fmt("%zu candidates, %zu under 0.5 s, %zu gated, %zu long gated, %zu scored "
                    "after gating, %zu short in training data",
                    cands.size(), short_total, short_gated, long_gated, leaked,
                    short_in_training)};
}

std::vector<lt::Example> Blobs(std::size_t n, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<lt::Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = i % 2 ? lt::Label::kLaughter : lt::Label::kOther;
    std::vector<double> x(dims);
    for (std::size_t k = 0; k < dims; ++k) x[k] = noise(rng) + (y == lt::Label::kLaughter ? 3.0 : 0.0);
    out.push_back({std::move(x), y});
  }
  return out;
}

Outcome RandomForest() {
  const std::size_t dims = 10;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < dims; ++k) names.push_back("f" + std::to_string(k));
  lt::ForestConfig cfg;
  cfg.seed = 1234;

  const auto blobs = Blobs(200, dims, 99);
  const auto t0 = Clock::now();
  const auto model = lt::TrainForest(blobs, names, cfg, 1);
  const double train_secs = SecondsSince(t0);
  const auto again = lt::TrainForest(blobs, names, cfg, 4);
  const bool identical = lt::SerializeForest(model) == lt::SerializeForest(again);

  const auto separable = lt::EvaluateCv(blobs, cfg, 50, 4);

  auto shuffled = blobs;
  std::vector<lt::Label> ys;
  for (const auto& e : shuffled) ys.push_back(e.y);
  std::mt19937_64 rng(5);
  std::shuffle(ys.begin(), ys.end(), rng);
  for (std::size_t i = 0; i < ys.size(); ++i) shuffled[i].y = ys[i];
  const auto chance = lt::EvaluateCv(shuffled, cfg, 50, 4);

  const double f1_sep = separable.laughter.f1.mean, f1_rand = chance.laughter.f1.mean;
  const bool pass = f1_sep >= 0.95 && f1_rand >= 0.4 && f1_rand <= 0.6 && identical &&
                    train_secs < 5.0;
  return {pass, Fmt("blobs holdout F1 %.3f, shuffled F1 %.3f (mean of 50 stratified holdouts), "
                    "byte-identical: %s, train %.3f s",
                    f1_sep, f1_rand, identical ? "yes" : "no", train_secs)};
}

lt::AudioClip Clip(std::vector<float> samples) {
  lt::AudioClip c;
  c.samples = std::move(samples);
  c.sample_rate = lt::kAnalysisSampleRate;
  c.end_s = static_cast<double>(c.samples.size()) / c.sample_rate;
  return c;
}

Outcome FeatureExtraction() {
  const int sr = lt::kAnalysisSampleRate;
  const double pi = std::acos(-1.0);
  std::vector<float> tone(sr), silence(sr, 0.0f), mix(sr);
  std::mt19937_64 rng(3);
  std::normal_distribution<float> noise(0.0f, 0.1f);
  for (int i = 0; i < sr; ++i) {
    tone[i] = static_cast<float>(0.5 * std::sin(2 * pi * 440.0 * i / sr));
    mix[i] = static_cast<float>(0.3 * std::sin(2 * pi * 220.0 * i / sr)) + noise(rng);
  }
  auto doubled = mix;
  for (auto& x : doubled) x *= 2.0f;

  const auto ft = lt::ExtractFeatures(Clip(tone));
  const auto fs_ = lt::ExtractFeatures(Clip(silence));
  const double flat1 = lt::ExtractFeatures(Clip(mix)).Get("spectral_flatness");
  const double flat2 = lt::ExtractFeatures(Clip(doubled)).Get("spectral_flatness");
  const double centroid = ft.Get("spectral_centroid");
  const double rms = fs_.Get("rms_mean"), p90 = fs_.Get("energy_p90");
  const double rel = std::abs(flat2 - flat1) / std::abs(flat1);
  const bool pass = centroid >= 415.0 && centroid <= 465.0 && rms == 0.0 && p90 == 0.0 &&
                    rel <= 1e-6;
  return {pass, Fmt("tone centroid %.2f Hz, silence rms_mean %g energy_p90 %g, "
                    "flatness %.9f vs %.9f (rel %.2e)",
                    centroid, rms, p90, flat1, flat2, rel)};
}

int Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "laughtrack");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = lt::RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (rc != 0) std::fprintf(stderr, "%s%s", out.str().c_str(), err.str().c_str());
  return rc;
}

Outcome EndToEndDeterminism() {
  const fs::path root = fs::path(LAUGHTRACK_TEST_TMP) / "acceptance_e2e";
  fs::remove_all(root);
  const auto t0 = Clock::now();
  lt::synthetic::Write(lt::synthetic::Generate({}), root / "fixture");
  const std::string fx = (root / "fixture").string(), work = (root / "work").string();
  int rc = 0;
  rc |= Cli({"extract-features", "--labels", fx + "/candidate_labels.csv", "--audio-root",
             fx + "/audio", "--out", work + "/features.csv", "--jobs", "4"});
  rc |= Cli({"train-rf", "--features", work + "/features.csv", "--labels",
             fx + "/candidate_labels.csv", "--seed", "11", "--out", work + "/model.json"});
  std::vector<std::string> digests;
  for (const char* run : {"run1", "run2"}) {
    rc |= Cli({"pipeline", "--seed", "11", "--jobs", "4", "--manifest", fx + "/manifest.jsonl",
               "--words-a", fx + "/words_a.jsonl", "--words-b", fx + "/words_b.jsonl",
               "--laughter", fx + "/laughter.jsonl", "--model", work + "/model.json",
               "--audio-root", fx + "/audio", "--out-dir", work + "/" + run});
    const fs::path ds = fs::path(work) / run / "dataset.jsonl";
    digests.push_back(fs::exists(ds) ? lt::FileSha256(ds) : std::string("missing"));
  }
  const double secs = SecondsSince(t0);
  // Every artifact, not only the dataset, should match between runs.
  std::size_t differing = 0, files = 0;
  for (const auto& e : fs::directory_iterator(fs::path(work) / "run1")) {
    ++files;
    const auto twin = fs::path(work) / "run2" / e.path().filename();
    differing += !fs::exists(twin) || lt::FileSha256(e.path()) != lt::FileSha256(twin);
  }
  const bool pass = rc == 0 && digests[0] == digests[1] && digests[0] != "missing" &&
                    differing == 0 && secs < 30.0;
  return {pass, Fmt("dataset sha256 %.16s... vs %.16s..., %zu/%zu artifacts differ, %.2f s",
                    digests[0].c_str(), digests[1].c_str(), differing, files, secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"timestamp-correction-fixture", CorrectionFixture},
      {"label-oracle-equivalence", LabelOracle},
      {"alignment-oracle-equivalence", AlignmentOracle},
      {"iou-matching-invariants", MatchingSuite},
      {"verification-gate", VerificationGate},
      {"random-forest", RandomForest},
      {"feature-extraction", FeatureExtraction},
      {"end-to-end-determinism", EndToEndDeterminism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %-30s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
