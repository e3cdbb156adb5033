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

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "laughtrack/features.hpp"
#include "laughtrack/wav.hpp"

namespace lt = laughtrack;
namespace fs = std::filesystem;

namespace {

constexpr int kSr = lt::kAnalysisSampleRate;

std::vector<float> Tone(double hz, double seconds, double amp = 0.5) {
  std::vector<float> out(static_cast<std::size_t>(seconds * kSr));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / kSr));
  return out;
}

std::vector<float> WhiteNoise(double seconds, std::uint64_t seed, float sigma = 0.2f) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, sigma);
  std::vector<float> out(static_cast<std::size_t>(seconds * kSr));
  for (auto& x : out) x = n(rng);
  return out;
}

lt::AudioClip Clip(std::vector<float> samples) {
  lt::AudioClip c;
  c.samples = std::move(samples);
  c.end_s = static_cast<double>(c.samples.size()) / kSr;
  return c;
}

lt::FeatureVector Extract(std::vector<float> samples) { return lt::ExtractFeatures(Clip(std::move(samples))); }

fs::path TmpDir() {
  const fs::path p = fs::path(LAUGHTRACK_TEST_TMP) / "features_test";
  fs::create_directories(p);
  return p;
}

// Magnitude-weighted centroid of one Hann frame by a direct DFT.
double NaiveCentroid(const std::vector<float>& x, std::size_t offset, std::size_t n) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
      acc += w * x[offset + i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
    }
    const double hz = static_cast<double>(k) * kSr / n;
    num += hz * std::abs(acc);
    den += std::abs(acc);
  }
  return num / den;
}

}  // namespace

TEST(FeatureLayout, SeventyNamedColumns) {
  EXPECT_EQ(lt::FeatureNames().size(), lt::kFeatureCount);
  EXPECT_EQ(lt::kFeatureCount, 70u);
  EXPECT_EQ(lt::FeatureNames().front(), "duration");
  EXPECT_EQ(lt::FeatureNames().back(), "delta2_mfcc_13");
}

TEST(Features, PureToneCentroidAndVoicing) {
  const auto f = Extract(Tone(440.0, 1.0));
  EXPECT_NEAR(f.Get("spectral_centroid"), 440.0, 25.0);
  EXPECT_GE(f.Get("voiced_ratio"), 0.9);
  EXPECT_NEAR(f.Get("pitch_median"), 440.0, 5.0);
  EXPECT_NEAR(f.Get("duration"), 1.0, 1e-9);
  EXPECT_TRUE(f.AllFinite());
}

TEST(Features, CentroidAgreesWithDirectDft) {
  auto x = Tone(300.0, 1.0, 0.4);
  const auto hi = Tone(1800.0, 1.0, 0.2);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += hi[i];
  const double lib = Extract(x).Get("spectral_centroid");
  const double ref = NaiveCentroid(x, 8000, 2048);
  EXPECT_NEAR(lib, ref, 0.02 * ref);
}

TEST(Features, SilenceIsZero) {
  const auto f = Extract(std::vector<float>(kSr, 0.0f));
  EXPECT_EQ(f.Get("rms_mean"), 0.0);
  EXPECT_EQ(f.Get("energy_p90"), 0.0);
  EXPECT_EQ(f.Get("burst_count"), 0.0);
  EXPECT_EQ(f.Get("temporal_centroid"), 0.5);
  EXPECT_TRUE(f.AllFinite());
}

TEST(Features, WhiteNoiseIsFlat) {
  const auto f = Extract(WhiteNoise(1.0, 17));
  EXPECT_GT(f.Get("spectral_flatness"), 0.5);
  EXPECT_LT(Extract(Tone(440.0, 1.0)).Get("spectral_flatness"), 0.1);
}

TEST(Features, ShortClipsAreRejected) {
  EXPECT_THROW(Extract(std::vector<float>(kSr / 20, 0.1f)), lt::ValidationError);
}

TEST(Features, DeterministicBitForBit) {
  const auto x = WhiteNoise(0.7, 3);
  EXPECT_EQ(Extract(x).values, Extract(x).values);
}

TEST(Features, AmplitudeScaling) {
  auto x = Tone(261.63, 1.0, 0.3);
  const auto noise = WhiteNoise(1.0, 5, 0.05f);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise[i];
  for (const float k : {2.0f, 0.25f}) {
    auto y = x;
    for (auto& v : y) v *= k;
    const auto a = Extract(x), b = Extract(y);
    EXPECT_NEAR(b.Get("rms_mean"), k * a.Get("rms_mean"), 1e-6 * k * a.Get("rms_mean"));
    for (const char* name : {"spectral_flatness", "spectral_centroid"})
      EXPECT_NEAR(b.Get(name), a.Get(name), 1e-6 * std::abs(a.Get(name))) << name;
    for (int c = 1; c <= 12; ++c) {
      const auto name = "chroma_" + std::to_string(c);
      EXPECT_NEAR(b.Get(name), a.Get(name), 1e-6 * std::max(1e-12, std::abs(a.Get(name)))) << name;
    }
    // Only the energy-bearing cepstral coefficient moves.
    EXPECT_GT(std::abs(b.Get("mfcc_1") - a.Get("mfcc_1")), 1.0);
    for (int c = 2; c <= 13; ++c) {
      const auto name = "mfcc_" + std::to_string(c);
      EXPECT_NEAR(b.Get(name), a.Get(name), 1e-6) << name;
    }
  }
}

TEST(Features, SilencePaddingMovesTemporalCentroidTowardHalf) {
  auto tone = Tone(440.0, 0.5);
  std::vector<float> early(tone), padded(kSr / 2, 0.0f);
  early.insert(early.end(), kSr / 2, 0.0f);  // sound in the first half
  padded.insert(padded.end(), tone.begin(), tone.end());
  padded.insert(padded.end(), kSr / 2, 0.0f);  // sound centered
  const auto a = Extract(early), b = Extract(padded);
  EXPECT_LT(a.Get("temporal_centroid"), 0.3);
  EXPECT_NEAR(b.Get("temporal_centroid"), 0.5, 0.01);
  EXPECT_NEAR(b.Get("spectral_centroid"), a.Get("spectral_centroid"), 5.0);
}

TEST(Features, LaughLikeBurstsAreCounted) {
  // 5 Hz on/off voiced bursts.
  auto x = Tone(300.0, 2.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::fmod(static_cast<double>(i) / kSr, 0.2) >= 0.1) x[i] = 0.0f;
  const auto f = Extract(x);
  EXPECT_GE(f.Get("burst_count"), 5.0);
  EXPECT_GT(f.Get("mod_energy_4_12"), 0.3);
}

TEST(FeaturesCsv, RoundTripIsExact) {
  std::vector<lt::FeatureRow> rows;
  rows.push_back({lt::SegmentKey::Of("v1", 1.5, 3.25), Extract(WhiteNoise(0.5, 1))});
  rows.push_back({lt::SegmentKey::Of("v2", 0.001, 0.9), Extract(Tone(523.0, 0.9))});
  const auto path = TmpDir() / "roundtrip.csv";
  lt::ExportFeatures(path, rows);
  EXPECT_EQ(lt::ImportFeatures(path), rows);
}

namespace {

std::string CsvWith(const std::function<void(std::vector<std::string>&, std::vector<std::string>&)>& edit) {
  std::vector<std::string> header = {"video_id", "start_s", "end_s"};
  header.insert(header.end(), lt::FeatureNames().begin(), lt::FeatureNames().end());
  std::vector<std::string> row = {"v", "0", "1"};
  row.resize(header.size(), "0.5");
  edit(header, row);
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  return join(header) + "\n" + join(row) + "\n";
}

}  // namespace

TEST(FeaturesCsv, NanCellRejectedWithRowNumber) {
  std::istringstream in(CsvWith([](auto&, auto& row) { row[10] = "nan"; }));
  try {
    lt::ReadFeatures(in);
    FAIL() << "expected ParseError";
  } catch (const lt::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(FeaturesCsv, ReorderedHeaderRejected) {
  std::istringstream in(CsvWith([](auto& header, auto&) { std::swap(header[5], header[6]); }));
  EXPECT_THROW(lt::ReadFeatures(in), lt::ParseError);
}

TEST(FeaturesCsv, MissingColumnNamed) {
  std::istringstream in(CsvWith([](auto& header, auto& row) {
    header.pop_back();
    row.pop_back();
  }));
  try {
    lt::ReadFeatures(in);
    FAIL();
  } catch (const lt::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("delta2_mfcc_13"), std::string::npos) << e.what();
  }
}

TEST(Wav, SilenceAtAnalysisRate) {
  const auto path = TmpDir() / "silence.wav";
  const std::vector<float> zeros(kSr, 0.0f);
  lt::WriteWav(path, zeros, kSr);
  const auto clip = lt::LoadClip(path, 0.0, 1.0, "s");
  EXPECT_EQ(clip.samples.size(), static_cast<std::size_t>(kSr));
  EXPECT_TRUE(std::all_of(clip.samples.begin(), clip.samples.end(), [](float v) { return v == 0.0f; }));
}

TEST(Wav, StereoIsMeanDownmixed) {
  const auto path = TmpDir() / "stereo.wav";
  std::vector<float> inter;
  for (int i = 0; i < 1000; ++i) {
    inter.push_back(0.5f);
    inter.push_back(-0.25f);
  }
  lt::WriteWav(path, inter, kSr, 2);
  const auto audio = lt::ReadWav(path);
  EXPECT_EQ(audio.channels, 2);
  ASSERT_EQ(audio.mono.size(), 1000u);
  for (float v : audio.mono) EXPECT_NEAR(v, 0.125f, 1.0 / 32768);
}

TEST(Wav, SliceLength) {
  const auto path = TmpDir() / "tone.wav";
  const auto tone = Tone(440.0, 1.0);
  lt::WriteWav(path, tone, kSr);
  EXPECT_EQ(lt::LoadClip(path, 0.25, 0.75, "t").samples.size(), 11025u);
  EXPECT_THROW(lt::LoadClip(path, 0.5, 1.5, "t"), lt::ValidationError);
}

TEST(Wav, ResamplesToAnalysisRate) {
  const auto path = TmpDir() / "tone16k.wav";
  std::vector<float> x(16000);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = static_cast<float>(0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0));
  lt::WriteWav(path, x, 16000);
  const auto clip = lt::LoadClip(path, 0.0, 1.0, "t");
  ASSERT_EQ(clip.samples.size(), static_cast<std::size_t>(kSr));
  EXPECT_NEAR(lt::ExtractFeatures(clip).Get("pitch_median"), 440.0, 5.0);
}

TEST(Wav, UnsupportedCodecIsRejected) {
  const auto path = TmpDir() / "junk.wav";
  {
    std::ofstream out(path, std::ios::binary);
    out << "RIFF\x24\0\0\0WAVEfmt ";
  }
  EXPECT_THROW(lt::ReadWav(path), lt::ParseError);
}
