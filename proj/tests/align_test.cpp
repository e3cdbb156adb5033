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

#include <random>

#include <gtest/gtest.h>

#include "laughtrack/align.hpp"
#include "laughtrack/synthetic.hpp"
#include "oracles.hpp"

namespace lt = laughtrack;
using lt::AlignOp;

namespace {

std::vector<AlignOp> Ops(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<AlignOp> ops;
  for (const auto& p : lt::AlignTokens(std::span<const std::string>(a), std::span<const std::string>(b)))
    ops.push_back(p.op);
  return ops;
}

std::vector<lt::Word> Words(std::initializer_list<std::pair<double, double>> spans) {
  std::vector<lt::Word> out;
  std::int64_t i = 0;
  for (const auto& [s, e] : spans) out.push_back({"v", i++, "w" + std::to_string(i), s, e});
  return out;
}

}  // namespace

TEST(AlignTokens, IdenticalListsAreAllMatches) {
  const std::vector<std::string> a = {"so", "this", "is", "it"};
  EXPECT_EQ(Ops(a, a), std::vector<AlignOp>(4, AlignOp::kMatch));
}

TEST(AlignTokens, InsertionInB) {
  EXPECT_EQ(Ops({"hi", "there"}, {"hi", "uh", "there"}),
            (std::vector<AlignOp>{AlignOp::kMatch, AlignOp::kInsertB, AlignOp::kMatch}));
}

TEST(AlignTokens, BothEmpty) { EXPECT_TRUE(Ops({}, {}).empty()); }

TEST(AlignTokens, CaseFoldedComparison) {
  EXPECT_EQ(Ops({"Hello", "ÉCOLE"}, {"hello", "école"}),
            (std::vector<AlignOp>{AlignOp::kMatch, AlignOp::kMatch}));
  EXPECT_EQ(lt::CaseFold("ŐRÜLT Ñ"), "őrült ñ");
}

TEST(AlignTokens, SubstitutionPreferredOverIndels) {
  EXPECT_EQ(Ops({"a", "b"}, {"a", "c"}),
            (std::vector<AlignOp>{AlignOp::kMatch, AlignOp::kSubstitute}));
}

TEST(AlignTokens, CostEqualsOracleOnRandomLists) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab = {"a", "A", "b", "c", "Ok", "ok", "x"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> a(rng() % 30), b(rng() % 30);
    for (auto& t : a) t = vocab[rng() % vocab.size()];
    for (auto& t : b) t = vocab[rng() % vocab.size()];
    const auto pairs = lt::AlignTokens(std::span<const std::string>(a), std::span<const std::string>(b));
    ASSERT_EQ(lt::AlignmentCost(pairs), oracle::EditDistance(a, b));
  }
}

TEST(Anomalies, UniformDurationsGiveNone) {
  EXPECT_TRUE(lt::FindAnomalousWords(Words({{0, 0.3}, {0.4, 0.7}, {0.8, 1.1}})).empty());
}

TEST(Anomalies, LongWordAmongShortOnes) {
  const auto w = Words({{0, 0.3}, {0.4, 0.7}, {0.8, 3.8}, {3.9, 4.2}, {4.3, 4.6}});
  EXPECT_EQ(lt::FindAnomalousWords(w), std::vector<std::size_t>{2});
}

TEST(Anomalies, SingleLongWordHitsAbsoluteFloor) {
  EXPECT_EQ(lt::FindAnomalousWords(Words({{0, 5}})), std::vector<std::size_t>{0});
  EXPECT_TRUE(lt::FindAnomalousWords(Words({{0, 0.7}})).empty());
}

TEST(Anomalies, EmptyTranscript) { EXPECT_TRUE(lt::FindAnomalousWords({}).empty()); }

class TwoWordFixture : public ::testing::Test {
 protected:
  lt::DualTranscript dual{"v", Words({{0.0, 3.0}, {3.0, 3.4}}), Words({{0.0, 0.4}, {0.5, 3.4}})};
};

TEST_F(TwoWordFixture, CandidateIsTheIntersection) {
  const auto r = lt::ExtractCandidates(dual, {});
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.candidates[0].start_s, 0.5);
  EXPECT_EQ(r.candidates[0].end_s, 3.0);
  EXPECT_EQ(r.candidates[0].prev_word_idx, 0);
  EXPECT_EQ(r.candidates[0].next_word_idx, 1);
  ASSERT_EQ(r.corrected_words.size(), 2u);
  EXPECT_EQ(r.corrected_words[0].start_s, 0.0);
  EXPECT_EQ(r.corrected_words[0].end_s, 0.4);
  EXPECT_EQ(r.corrected_words[1].start_s, 3.0);
  EXPECT_EQ(r.corrected_words[1].end_s, 3.4);
}

TEST_F(TwoWordFixture, FullyCoveredByExistingLaughter) {
  const std::vector<lt::LaughterSegment> existing = {
      {"v", 0.5, 3.0, lt::LaughterSource::kDetector, std::nullopt}};
  const auto r = lt::ExtractCandidates(dual, existing);
  EXPECT_TRUE(r.candidates.empty());
  EXPECT_EQ(r.corrected_words, dual.words_a);
}

TEST_F(TwoWordFixture, OverlapBelowHalfIsStillNovel) {
  const std::vector<lt::LaughterSegment> existing = {
      {"v", 0.5, 1.7, lt::LaughterSource::kDetector, std::nullopt}};
  EXPECT_EQ(lt::ExtractCandidates(dual, existing).candidates.size(), 1u);
}

TEST_F(TwoWordFixture, MinimumDurationIsInclusive) {
  lt::MiningConfig cfg;
  cfg.min_candidate_dur = 2.5;
  EXPECT_EQ(lt::ExtractCandidates(dual, {}, cfg).candidates.size(), 1u);
  cfg.min_candidate_dur = 2.6;
  EXPECT_TRUE(lt::ExtractCandidates(dual, {}, cfg).candidates.empty());
}

TEST(ExtractCandidates, IdenticalTranscriptsWithoutAnomalies) {
  const auto w = Words({{0, 0.3}, {0.4, 0.7}, {0.8, 1.1}});
  const auto r = lt::ExtractCandidates({"v", w, w}, {});
  EXPECT_TRUE(r.candidates.empty());
  EXPECT_EQ(r.corrected_words, w);
}

TEST(ExtractCandidates, UnsortedInputIsRejected) {
  const auto w = Words({{1, 1.3}, {0.4, 0.7}});
  EXPECT_THROW(lt::ExtractCandidates({"v", w, w}, {}), lt::ValidationError);
}

TEST(ExtractCandidates, LastWordHasNoSuccessor) {
  const auto a = Words({{0, 0.3}, {0.4, 3.4}});
  const auto b = Words({{0, 0.3}, {0.4, 3.4}});
  EXPECT_TRUE(lt::ExtractCandidates({"v", a, b}, {}).candidates.empty());
}

// Properties over synthetic corpora with planted events.
TEST(MineCorpus, PlantedEventsAreRecoveredExactly) {
  lt::synthetic::Config cfg;
  cfg.videos = 50;
  cfg.audio = false;
  const auto corpus = lt::synthetic::Generate(cfg);
  const auto r = lt::MineCorpus(corpus.manifest, lt::PairTranscripts(corpus.words_a, corpus.words_b),
                                corpus.detector, {}, 4);
  const auto expected = corpus.CandidateLabels();
  ASSERT_EQ(r.candidates.size(), expected.size());
  for (const auto& c : r.candidates)
    EXPECT_TRUE(expected.count(lt::SegmentKey::Of(c.video_id, c.start_s, c.end_s)))
        << c.video_id << " " << c.start_s << " " << c.end_s;
  EXPECT_EQ(r.skipped(), 0u);
}

TEST(MineCorpus, ZeroAnomaliesGiveZeroCandidates) {
  lt::synthetic::Config cfg;
  cfg.missed_laughs = cfg.detected_laughs = cfg.noise_events = 0;
  cfg.audio = false;
  const auto corpus = lt::synthetic::Generate(cfg);
  const auto r = lt::MineCorpus(corpus.manifest, lt::PairTranscripts(corpus.words_a, corpus.words_b), {});
  EXPECT_TRUE(r.candidates.empty());
  EXPECT_EQ(r.corrected_words, corpus.words_a);
}

TEST(MineCorpus, MissingTranscriptIsReportedAndSkipped) {
  lt::synthetic::Config cfg;
  cfg.videos = 3;
  cfg.audio = false;
  const auto corpus = lt::synthetic::Generate(cfg);
  auto transcripts = lt::PairTranscripts(corpus.words_a, corpus.words_b);
  const std::string gone = transcripts.begin()->first;
  transcripts.erase(transcripts.begin());
  const auto r = lt::MineCorpus(corpus.manifest, transcripts, corpus.detector);
  EXPECT_EQ(r.skipped(), 1u);
  for (const auto& c : r.candidates) EXPECT_NE(c.video_id, gone);
}

TEST(MineCorpus, CorrectionInvariantsOnRandomFixtures) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    lt::synthetic::Config cfg;
    cfg.seed = seed;
    cfg.videos = 4;
    cfg.audio = false;
    cfg.substitution_rate = 0.02 * static_cast<double>(seed % 5);
    const auto corpus = lt::synthetic::Generate(cfg);
    const auto transcripts = lt::PairTranscripts(corpus.words_a, corpus.words_b);
    for (const auto& [id, dual] : transcripts) {
      std::vector<lt::LaughterSegment> existing;
      for (const auto& l : corpus.detector)
        if (l.video_id == id) existing.push_back(l);
      const auto r = lt::ExtractCandidates(dual, existing);
      const auto& a = dual.words_a;
      const auto& w = r.corrected_words;
      ASSERT_EQ(w.size(), a.size());
      std::set<std::int64_t> flanking;
      for (const auto& c : r.candidates) {
        EXPECT_GE(c.end_s - c.start_s, 0.5 - 1e-9);
        flanking.insert(c.prev_word_idx);
        flanking.insert(c.next_word_idx);
        for (const auto& word : w)
          EXPECT_FALSE(lt::IntervalsOverlap(word.start_s, word.end_s, c.start_s, c.end_s))
              << id << " word " << word.idx;
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_EQ(w[i].idx, a[i].idx);
        EXPECT_EQ(w[i].token, a[i].token);
        if (!flanking.count(a[i].idx)) EXPECT_EQ(w[i], a[i]);
        if (i > 0) EXPECT_LE(w[i - 1].start_s, w[i].start_s);
      }
      // Idempotence.
      auto again_existing = existing;
      for (const auto& c : r.candidates)
        again_existing.push_back({id, c.start_s, c.end_s, lt::LaughterSource::kAsrGap, std::nullopt});
      lt::SortByStart(again_existing);
      const auto again = lt::ExtractCandidates({id, w, dual.words_b}, again_existing);
      EXPECT_TRUE(again.candidates.empty()) << id << " seed " << seed;
    }
  }
}
