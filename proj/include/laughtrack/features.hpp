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

// Segment-level acoustic descriptor used to validate laughter candidates.
//
// Layout (70 values, fixed order):
//   temporal   duration voiced_ratio voiced_frames burst_count temporal_centroid
//   energy     rms_mean rms_std rms_slope energy_p90
//   spectral   spectral_bandwidth rolloff_85 rolloff_95 spectral_flatness
//              spectral_contrast spectral_centroid
//   pitch      pitch_median pitch_std hnr
//   modulation mod_energy_4_12
//   chroma_1..12, mfcc_1..13, delta_mfcc_1..13, delta2_mfcc_1..13
//
// Frame-level values come from 2048-sample Hann frames with a 512 hop on
// centered (zero-padded) audio at 22050 Hz. Spectral descriptors and chroma
// are pooled with frame-energy weights, so silent frames do not pull them
// toward zero. MFCCs and their deltas are plain frame means.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "laughtrack/error.hpp"
#include "laughtrack/fft.hpp"
#include "laughtrack/wav.hpp"

namespace laughtrack {

inline constexpr std::size_t kNumChroma = 12;
inline constexpr std::size_t kNumMfcc = 13;
inline constexpr std::size_t kFeatureCount = 19 + kNumChroma + 3 * kNumMfcc;

namespace feat {
enum Index : std::size_t {
  kDuration = 0,
  kVoicedRatio,
  kVoicedFrames,
  kBurstCount,
  kTemporalCentroid,
  kRmsMean,
  kRmsStd,
  kRmsSlope,
  kEnergyP90,
  kSpectralBandwidth,
  kRolloff85,
  kRolloff95,
  kSpectralFlatness,
  kSpectralContrast,
  kSpectralCentroid,
  kPitchMedian,
  kPitchStd,
  kHnr,
  kModEnergy4To12,
  kChroma,
  kMfcc = kChroma + kNumChroma,
  kDeltaMfcc = kMfcc + kNumMfcc,
  kDelta2Mfcc = kDeltaMfcc + kNumMfcc,
};
static_assert(kDelta2Mfcc + kNumMfcc == kFeatureCount);
}  // namespace feat

inline const std::vector<std::string>& FeatureNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {
        "duration",          "voiced_ratio",     "voiced_frames",      "burst_count",
        "temporal_centroid", "rms_mean",         "rms_std",            "rms_slope",
        "energy_p90",        "spectral_bandwidth", "rolloff_85",       "rolloff_95",
        "spectral_flatness", "spectral_contrast", "spectral_centroid", "pitch_median",
        "pitch_std",         "hnr",              "mod_energy_4_12"};
    for (std::size_t i = 1; i <= kNumChroma; ++i) n.push_back("chroma_" + std::to_string(i));
    for (const char* prefix : {"mfcc_", "delta_mfcc_", "delta2_mfcc_"})
      for (std::size_t i = 1; i <= kNumMfcc; ++i) n.push_back(prefix + std::to_string(i));
    return n;
  }();
  return names;
}

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  double Get(std::string_view name) const {
    const auto& names = FeatureNames();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error("unknown feature \"" + std::string(name) + "\"");
    return values[static_cast<std::size_t>(it - names.begin())];
  }

  bool AllFinite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const FeatureVector&) const = default;
};

struct FeatureConfig {
  int n_fft = 2048;
  int hop = 512;
  int n_mels = 40;
  double pitch_min_hz = 60.0;
  double pitch_max_hz = 500.0;
  // Minimum normalized autocorrelation peak for a frame to count as voiced.
  double voicing_threshold = 0.5;
  int delta_width = 9;
};

namespace detail {

inline double HzToMel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return hz >= min_log_hz ? min_log_mel + std::log(hz / min_log_hz) / logstep : hz / f_sp;
}

inline double MelToHz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return mel >= min_log_mel ? min_log_hz * std::exp(logstep * (mel - min_log_mel)) : f_sp * mel;
}

// Slaney-style triangular filters with area normalization, [0, sr/2].
inline std::vector<std::vector<double>> MelFilterbank(int n_mels, int n_fft, int sample_rate) {
  const std::size_t bins = static_cast<std::size_t>(n_fft / 2 + 1);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  const double mel_max = HzToMel(sample_rate / 2.0);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = MelToHz(mel_max * static_cast<double>(i) / (n_mels + 1));
  std::vector<std::vector<double>> fb(static_cast<std::size_t>(n_mels), std::vector<double>(bins));
  for (std::size_t m = 0; m < fb.size(); ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    const double norm = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      fb[m][k] = std::max(0.0, std::min(up, down)) * norm;
    }
  }
  return fb;
}

// Linear-interpolated percentile, q in [0, 100].
inline double Percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double Median(std::vector<double> v) { return Percentile(std::move(v), 50.0); }

inline double Mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double StdDev(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = Mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Regression deltas over a (2*half+1)-frame window with edge replication.
inline std::vector<std::vector<double>> Deltas(const std::vector<std::vector<double>>& rows,
                                               int width) {
  const int half = width / 2;
  double denom = 0.0;
  for (int n = 1; n <= half; ++n) denom += 2.0 * n * n;
  const auto t_max = static_cast<std::ptrdiff_t>(rows.size()) - 1;
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(rows.empty() ? 0 : rows[0].size()));
  for (std::ptrdiff_t t = 0; t <= t_max; ++t) {
    for (std::size_t c = 0; c < out[static_cast<std::size_t>(t)].size(); ++c) {
      double acc = 0.0;
      for (int n = 1; n <= half; ++n) {
        const auto ahead = static_cast<std::size_t>(std::min<std::ptrdiff_t>(t + n, t_max));
        const auto behind = static_cast<std::size_t>(std::max<std::ptrdiff_t>(t - n, 0));
        acc += n * (rows[ahead][c] - rows[behind][c]);
      }
      out[static_cast<std::size_t>(t)][c] = acc / denom;
    }
  }
  return out;
}

struct PitchEstimate {
  double f0 = 0.0;
  double confidence = 0.0;  // normalized autocorrelation at the chosen lag
};

// Normalized autocorrelation pitch tracker for one unwindowed frame. The raw
// autocorrelation comes from an FFT of twice the frame length; the per-lag
// energies from prefix sums.
inline PitchEstimate EstimatePitch(std::span<const double> frame, RealFft& fft,
                                   std::vector<double>& scratch, int sample_rate,
                                   double fmin, double fmax) {
  const std::size_t n = frame.size();
  const auto lag_min = static_cast<std::size_t>(std::floor(sample_rate / fmax));
  const auto lag_max = std::min(n - 2, static_cast<std::size_t>(std::ceil(sample_rate / fmin)));
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + frame[i] * frame[i];
  if (prefix[n] <= 0.0 || lag_min >= lag_max) return {};

  fft.Forward(frame);
  // |X|^2 back through a forward real FFT gives the autocorrelation (the
  // spectrum is real and even, so forward and inverse agree up to scale).
  scratch.assign(fft.size(), 0.0);
  for (std::size_t k = 0; k < fft.bins(); ++k) {
    scratch[k] = fft.power(k);
    if (k > 0 && k < fft.size() - k) scratch[fft.size() - k] = scratch[k];
  }
  fft.Forward(scratch);
  const double scale = 1.0 / static_cast<double>(fft.size());

  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t lag = lag_min; lag <= lag_max + 1 && lag < n; ++lag) {
    const double e0 = prefix[n - lag];
    const double e1 = prefix[n] - prefix[lag];
    const double denom = std::sqrt(e0 * e1);
    r[lag] = denom > 0.0 ? fft.bin(lag).real() * scale / denom : 0.0;
  }
  double best = -1.0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) best = std::max(best, r[lag]);
  if (best <= 0.0) return {};
  // Smallest lag whose peak is close to the global best avoids octave errors.
  std::size_t chosen = lag_min;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    const bool peak = (lag == lag_min || r[lag] >= r[lag - 1]) && r[lag] >= r[lag + 1];
    if (peak && r[lag] >= 0.9 * best) {
      chosen = lag;
      break;
    }
  }
  double refined = static_cast<double>(chosen);
  if (chosen > lag_min && chosen < lag_max) {
    const double a = r[chosen - 1], b = r[chosen], c = r[chosen + 1];
    const double curvature = a - 2.0 * b + c;
    if (curvature < 0.0) refined += 0.5 * (a - c) / curvature;
  }
  return {sample_rate / refined, std::min(1.0, r[chosen])};
}

inline double HnrDb(double r) {
  if (r <= 0.0) return -20.0;
  r = std::min(r, 1.0 - 1e-12);
  return std::clamp(10.0 * std::log10(r / (1.0 - r)), -20.0, 40.0);
}

}  // namespace detail

// Deterministic: the same clip and config always produce the same bits.
inline FeatureVector ExtractFeatures(const AudioClip& clip, const FeatureConfig& cfg = {}) {
  const int sr = clip.sample_rate;
  if (sr <= 0) throw ValidationError("clip sample rate must be positive");
  const std::size_t n = clip.samples.size();
  const double clip_seconds = static_cast<double>(n) / sr;
  if (clip_seconds < 0.1 - 0.5 / sr)
    throw ValidationError("clip shorter than 0.1 s (" + std::to_string(clip_seconds) + " s)");

  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  const auto hop = static_cast<std::size_t>(cfg.hop);
  const std::size_t bins = n_fft / 2 + 1;
  const std::size_t pad = n_fft / 2;
  const std::size_t n_frames = 1 + n / hop;

  std::vector<double> padded(n + 2 * pad, 0.0);
  for (std::size_t i = 0; i < n; ++i) padded[pad + i] = clip.samples[i];

  std::vector<double> window(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n_fft);

  const auto mel_fb = detail::MelFilterbank(cfg.n_mels, cfg.n_fft, sr);
  std::vector<double> freqs(bins);
  for (std::size_t k = 0; k < bins; ++k) freqs[k] = static_cast<double>(k) * sr / n_fft;

  // Pitch classes per bin (C = 0); bins below C1 are ignored.
  std::vector<int> pitch_class(bins, -1);
  for (std::size_t k = 1; k < bins; ++k) {
    if (freqs[k] < 32.7) continue;
    const long semis = std::lround(12.0 * std::log2(freqs[k] / 440.0)) + 9;
    pitch_class[k] = static_cast<int>(((semis % 12) + 12) % 12);
  }
  const std::array<double, 8> band_edges = {0.0, 200.0, 400.0, 800.0, 1600.0, 3200.0, 6400.0,
                                            sr / 2.0 + 1.0};

  RealFft spectrum_fft(n_fft);
  RealFft acf_fft(2 * n_fft);
  std::vector<double> acf_scratch;

  std::vector<double> rms(n_frames), weight(n_frames);
  std::vector<double> centroid(n_frames), bandwidth(n_frames), roll85(n_frames), roll95(n_frames),
      flatness(n_frames), contrast(n_frames);
  std::vector<std::array<double, kNumChroma>> chroma(n_frames);
  std::vector<std::vector<double>> mel_power(n_frames, std::vector<double>(mel_fb.size()));
  std::vector<detail::PitchEstimate> pitch(n_frames);

  std::vector<double> frame(n_fft), windowed(n_fft), mag(bins), pw(bins), band;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* src = padded.data() + f * hop;
    double sq = 0.0;
    for (std::size_t i = 0; i < n_fft; ++i) {
      frame[i] = src[i];
      windowed[i] = src[i] * window[i];
      sq += src[i] * src[i];
    }
    rms[f] = std::sqrt(sq / static_cast<double>(n_fft));
    pitch[f] = detail::EstimatePitch(frame, acf_fft, acf_scratch, sr, cfg.pitch_min_hz,
                                     cfg.pitch_max_hz);

    spectrum_fft.Forward(windowed);
    double mag_sum = 0.0, pw_sum = 0.0, pw_max = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      pw[k] = spectrum_fft.power(k);
      mag[k] = std::sqrt(pw[k]);
      mag_sum += mag[k];
      pw_sum += pw[k];
      pw_max = std::max(pw_max, pw[k]);
    }
    weight[f] = pw_sum;
    for (std::size_t m = 0; m < mel_fb.size(); ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < bins; ++k) acc += mel_fb[m][k] * pw[k];
      mel_power[f][m] = acc;
    }
    if (pw_sum <= 0.0) {
      flatness[f] = 1.0;
      continue;
    }

    double c = 0.0;
    for (std::size_t k = 0; k < bins; ++k) c += freqs[k] * mag[k];
    c /= mag_sum;
    centroid[f] = c;
    double bw = 0.0;
    for (std::size_t k = 0; k < bins; ++k) bw += mag[k] * (freqs[k] - c) * (freqs[k] - c);
    bandwidth[f] = std::sqrt(bw / mag_sum);

    double cum = 0.0;
    bool got85 = false, got95 = false;
    for (std::size_t k = 0; k < bins; ++k) {
      cum += mag[k];
      if (!got85 && cum >= 0.85 * mag_sum) roll85[f] = freqs[k], got85 = true;
      if (!got95 && cum >= 0.95 * mag_sum) {
        roll95[f] = freqs[k];
        got95 = true;
        break;
      }
    }

    // Floors are relative to the frame peak so the measure is gain-invariant.
    const double floor = 1e-10 * pw_max;
    double log_sum = 0.0, lin_sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double p = std::max(pw[k], floor);
      log_sum += std::log(p);
      lin_sum += p;
    }
    flatness[f] = std::clamp(std::exp(log_sum / bins) / (lin_sum / bins), 0.0, 1.0);

    double contrast_sum = 0.0;
    std::size_t n_bands = 0;
    for (std::size_t b = 0; b + 1 < band_edges.size(); ++b) {
      band.clear();
      for (std::size_t k = 0; k < bins; ++k)
        if (freqs[k] >= band_edges[b] && freqs[k] < band_edges[b + 1]) band.push_back(pw[k]);
      if (band.empty()) continue;
      std::sort(band.begin(), band.end());
      const std::size_t q = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(0.02 * static_cast<double>(band.size()))));
      const double valley = std::accumulate(band.begin(), band.begin() + q, 0.0) / q;
      const double peak = std::accumulate(band.end() - q, band.end(), 0.0) / q;
      if (peak > 0.0) contrast_sum += 10.0 * std::log10(peak / std::max(valley, 1e-10 * peak));
      ++n_bands;
    }
    contrast[f] = n_bands > 0 ? contrast_sum / n_bands : 0.0;

    auto& ch = chroma[f];
    for (std::size_t k = 1; k < bins; ++k)
      if (pitch_class[k] >= 0) ch[static_cast<std::size_t>(pitch_class[k])] += pw[k];
    const double ch_max = *std::max_element(ch.begin(), ch.end());
    if (ch_max > 0.0)
      for (auto& v : ch) v /= ch_max;
  }

  FeatureVector out;
  out[feat::kDuration] = clip.end_s > clip.start_s ? clip.end_s - clip.start_s : clip_seconds;

  // Voicing.
  const double rms_median = detail::Median(rms);
  std::vector<bool> voiced(n_frames, false);
  std::vector<double> voiced_f0, voiced_hnr, active_hnr;
  std::size_t bursts = 0;
  for (std::size_t f = 0; f < n_frames; ++f) {
    voiced[f] = rms[f] > 0.5 * rms_median && pitch[f].confidence > cfg.voicing_threshold;
    if (rms[f] > 0.0) active_hnr.push_back(detail::HnrDb(pitch[f].confidence));
    if (voiced[f]) {
      voiced_f0.push_back(pitch[f].f0);
      voiced_hnr.push_back(detail::HnrDb(pitch[f].confidence));
      if (f == 0 || !voiced[f - 1]) ++bursts;
    }
  }
  out[feat::kVoicedFrames] = static_cast<double>(voiced_f0.size());
  out[feat::kVoicedRatio] = static_cast<double>(voiced_f0.size()) / static_cast<double>(n_frames);
  out[feat::kBurstCount] = static_cast<double>(bursts);
  out[feat::kPitchMedian] = detail::Median(voiced_f0);
  out[feat::kPitchStd] = detail::StdDev(voiced_f0);
  out[feat::kHnr] = !voiced_hnr.empty() ? detail::Mean(voiced_hnr) : detail::Mean(active_hnr);

  // Sample-level energy centroid, 0.5 for silence.
  double e_sum = 0.0, e_weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = static_cast<double>(clip.samples[i]) * clip.samples[i];
    e_sum += e;
    e_weighted += (static_cast<double>(i) + 0.5) * e;
  }
  out[feat::kTemporalCentroid] = e_sum > 0.0 ? e_weighted / e_sum / static_cast<double>(n) : 0.5;

  // Energy.
  out[feat::kRmsMean] = detail::Mean(rms);
  out[feat::kRmsStd] = detail::StdDev(rms);
  {
    const double frame_dt = static_cast<double>(hop) / sr;
    const double t_mean = frame_dt * static_cast<double>(n_frames - 1) / 2.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) {
      const double dt = frame_dt * static_cast<double>(f) - t_mean;
      sxy += dt * (rms[f] - out[feat::kRmsMean]);
      sxx += dt * dt;
    }
    out[feat::kRmsSlope] = sxx > 0.0 ? sxy / sxx : 0.0;
    std::vector<double> energy(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) energy[f] = rms[f] * rms[f];
    out[feat::kEnergyP90] = detail::Percentile(energy, 90.0);
  }

  // Spectral, energy-weighted.
  const double w_total = std::accumulate(weight.begin(), weight.end(), 0.0);
  auto pooled = [&](const std::vector<double>& v, double fallback) {
    if (w_total <= 0.0) return fallback;
    double acc = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) acc += weight[f] * v[f];
    return acc / w_total;
  };
  out[feat::kSpectralCentroid] = pooled(centroid, 0.0);
  out[feat::kSpectralBandwidth] = pooled(bandwidth, 0.0);
  out[feat::kRolloff85] = pooled(roll85, 0.0);
  out[feat::kRolloff95] = pooled(roll95, 0.0);
  out[feat::kSpectralFlatness] = std::clamp(pooled(flatness, 1.0), 0.0, 1.0);
  out[feat::kSpectralContrast] = pooled(contrast, 0.0);
  for (std::size_t c = 0; c < kNumChroma; ++c) {
    double acc = 0.0;
    if (w_total > 0.0) {
      for (std::size_t f = 0; f < n_frames; ++f) acc += weight[f] * chroma[f][c];
      acc /= w_total;
    }
    out[feat::kChroma + c] = acc;
  }

  // 4-12 Hz share of the RMS envelope's (mean-removed) spectrum.
  {
    const double frame_rate = static_cast<double>(sr) / hop;
    const std::size_t m = std::max<std::size_t>(256, NextPowerOfTwo(n_frames));
    std::vector<double> env(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) env[f] = rms[f] - out[feat::kRmsMean];
    RealFft env_fft(m);
    env_fft.Forward(env);
    double band_e = 0.0, total_e = 0.0;
    for (std::size_t k = 1; k < env_fft.bins(); ++k) {
      const double hz = static_cast<double>(k) * frame_rate / static_cast<double>(m);
      const double p = env_fft.power(k);
      total_e += p;
      if (hz >= 4.0 && hz <= 12.0) band_e += p;
    }
    out[feat::kModEnergy4To12] = total_e > 1e-300 ? band_e / total_e : 0.0;
  }

  // MFCC: log-mel with an 80 dB floor below the clip's loudest band, then an
  // orthonormal DCT-II.
  {
    double mel_max = 0.0;
    for (const auto& row : mel_power)
      for (double v : row) mel_max = std::max(mel_max, v);
    const std::size_t n_mels = mel_fb.size();
    std::vector<std::vector<double>> mfcc(n_frames, std::vector<double>(kNumMfcc));
    std::vector<double> log_mel(n_mels);
    for (std::size_t f = 0; f < n_frames; ++f) {
      for (std::size_t m = 0; m < n_mels; ++m)
        log_mel[m] = mel_max > 0.0 ? 10.0 * std::log10(std::max(mel_power[f][m], 1e-8 * mel_max))
                                   : -100.0;
      for (std::size_t c = 0; c < kNumMfcc; ++c) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n_mels; ++m)
          acc += log_mel[m] * std::cos(std::numbers::pi * static_cast<double>(c) *
                                       (2.0 * static_cast<double>(m) + 1.0) / (2.0 * n_mels));
        const double scale = c == 0 ? std::sqrt(1.0 / n_mels) : std::sqrt(2.0 / n_mels);
        mfcc[f][c] = acc * scale;
      }
    }
    const auto delta = detail::Deltas(mfcc, cfg.delta_width);
    const auto delta2 = detail::Deltas(delta, cfg.delta_width);
    for (std::size_t c = 0; c < kNumMfcc; ++c) {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0;
      for (std::size_t f = 0; f < n_frames; ++f) {
        s0 += mfcc[f][c];
        s1 += delta[f][c];
        s2 += delta2[f][c];
      }
      out[feat::kMfcc + c] = s0 / n_frames;
      out[feat::kDeltaMfcc + c] = s1 / n_frames;
      out[feat::kDelta2Mfcc + c] = s2 / n_frames;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// features.csv: video_id,start_s,end_s,<feature columns in FeatureNames() order>

struct SegmentKey {
  std::string video_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  static SegmentKey Of(const std::string& video_id, double start_s, double end_s) {
    return {video_id, std::llround(start_s * 1000.0), std::llround(end_s * 1000.0)};
  }
  double start_s() const { return static_cast<double>(start_ms) / 1000.0; }
  double end_s() const { return static_cast<double>(end_ms) / 1000.0; }

  auto operator<=>(const SegmentKey&) const = default;
};

struct FeatureRow {
  SegmentKey key;
  FeatureVector features;

  bool operator==(const FeatureRow&) const = default;
};

namespace detail {

inline std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string StripCr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

inline void WriteFeatures(std::ostream& out, const std::vector<FeatureRow>& rows) {
  out << "video_id,start_s,end_s";
  for (const auto& name : FeatureNames()) out << ',' << name;
  out << '\n';
  for (const auto& row : rows) {
    if (row.key.video_id.find_first_of(",\"\n\r") != std::string::npos)
      throw ValidationError("video_id \"" + row.key.video_id + "\" cannot be written to CSV");
    if (!row.features.AllFinite())
      throw ValidationError("non-finite feature for video \"" + row.key.video_id + "\"");
    out << row.key.video_id << ',' << detail::FormatDouble(row.key.start_s()) << ','
        << detail::FormatDouble(row.key.end_s());
    for (double v : row.features.values) out << ',' << detail::FormatDouble(v);
    out << '\n';
  }
}

inline std::vector<FeatureRow> ReadFeatures(std::istream& in, const std::string& name = "features") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name, 1, "missing header");
  const auto header = detail::SplitCsv(detail::StripCr(line));
  std::vector<std::string> expected = {"video_id", "start_s", "end_s"};
  expected.insert(expected.end(), FeatureNames().begin(), FeatureNames().end());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (std::find(header.begin(), header.end(), expected[i]) == header.end())
      throw ParseError(name, 1, "missing column \"" + expected[i] + "\"");
  }
  if (header.size() != expected.size())
    throw ParseError(name, 1, "expected " + std::to_string(expected.size()) + " columns, got " +
                                  std::to_string(header.size()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i])
      throw ParseError(name, 1, "column " + std::to_string(i + 1) + " is \"" + header[i] +
                                    "\" but \"" + expected[i] + "\" is required there");
  }

  std::vector<FeatureRow> rows;
  std::size_t line_no = 1;
  auto parse_number = [&](const std::string& cell, const std::string& column) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
      throw ParseError(name, line_no, "column \"" + column + "\": not a number: \"" + cell + "\"");
    if (!std::isfinite(v))
      throw ParseError(name, line_no, "column \"" + column + "\": non-finite value");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::StripCr(line);
    if (line.empty()) continue;
    const auto cells = detail::SplitCsv(line);
    if (cells.size() != expected.size())
      throw ParseError(name, line_no, "expected " + std::to_string(expected.size()) +
                                          " cells, got " + std::to_string(cells.size()));
    FeatureRow row;
    const double start = parse_number(cells[1], "start_s");
    const double end = parse_number(cells[2], "end_s");
    row.key = SegmentKey::Of(cells[0], start, end);
    for (std::size_t i = 0; i < kFeatureCount; ++i)
      row.features[i] = parse_number(cells[3 + i], expected[3 + i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<FeatureRow> ImportFeatures(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return ReadFeatures(in, path.string());
}

inline void ExportFeatures(const std::filesystem::path& path, const std::vector<FeatureRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  WriteFeatures(out, rows);
}

inline std::map<SegmentKey, FeatureVector> IndexFeatures(const std::vector<FeatureRow>& rows) {
  std::map<SegmentKey, FeatureVector> out;
  for (const auto& r : rows) out[r.key] = r.features;
  return out;
}

}  // namespace laughtrack
