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

// RIFF/WAVE reading (16-bit PCM or 32-bit float, any channel count) and clip
// extraction at the analysis sample rate.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "laughtrack/error.hpp"

namespace laughtrack {

inline constexpr int kAnalysisSampleRate = 22050;

struct WavAudio {
  int sample_rate = 0;
  int channels = 0;
  std::vector<float> mono;  // mean of all channels, in [-1, 1]

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(mono.size()) / sample_rate : 0.0;
  }
};

struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kAnalysisSampleRate;
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
};

namespace detail {

inline std::uint32_t ReadU32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void PutU32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xFF);
}
inline void PutU16(std::string& s, std::uint16_t v) {
  s += static_cast<char>(v & 0xFF);
  s += static_cast<char>((v >> 8) & 0xFF);
}

}  // namespace detail

inline WavAudio ReadWav(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(name, 0, "cannot open audio file");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ParseError(name, 0, "not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw ParseError(name, 0, "truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = detail::ReadU16(f);
      channels = detail::ReadU16(f + 2);
      rate = detail::ReadU32(f + 4);
      bits = detail::ReadU16(f + 14);
      if (format == 0xFFFE && avail >= 26) format = detail::ReadU16(f + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (format == 0 || data == nullptr) throw ParseError(name, 0, "missing fmt or data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw ParseError(name, 0, "unsupported codec (format " + std::to_string(format) + ", " +
                                  std::to_string(bits) + " bits); need 16-bit PCM or float32");
  if (channels == 0 || rate == 0) throw ParseError(name, 0, "invalid channel count or rate");

  WavAudio audio;
  audio.sample_rate = static_cast<int>(rate);
  audio.channels = channels;
  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  audio.mono.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(detail::ReadU16(p)) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, sizeof v);
        acc += std::clamp(static_cast<double>(v), -1.0, 1.0);
      }
    }
    audio.mono[i] = static_cast<float>(acc / channels);
  }
  return audio;
}

// Writes interleaved samples as 16-bit PCM.
inline void WriteWav(const std::filesystem::path& path, std::span<const float> interleaved,
                     int sample_rate, int channels = 1) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  out += "RIFF";
  detail::PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  detail::PutU32(out, 16);
  detail::PutU16(out, 1);
  detail::PutU16(out, static_cast<std::uint16_t>(channels));
  detail::PutU32(out, static_cast<std::uint32_t>(sample_rate));
  detail::PutU32(out, static_cast<std::uint32_t>(sample_rate * channels * 2));
  detail::PutU16(out, static_cast<std::uint16_t>(channels * 2));
  detail::PutU16(out, 16);
  out += "data";
  detail::PutU32(out, data_bytes);
  for (float v : interleaved) {
    const double c = std::clamp(static_cast<double>(v), -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(c * 32767.0));
    detail::PutU16(out, static_cast<std::uint16_t>(q));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(path.string() + ": cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

// Cuts [start_s, end_s) out of `audio` at kAnalysisSampleRate. Rate conversion
// uses Blackman-windowed sinc interpolation with the cutoff at the lower of
// the two Nyquist frequencies.
inline AudioClip ClipAudio(const WavAudio& audio, double start_s, double end_s,
                           const std::string& video_id = {}) {
  if (audio.sample_rate <= 0) throw ValidationError("audio has no sample rate");
  const double half_sample = 0.5 / audio.sample_rate;
  if (!(start_s >= 0.0) || !(end_s > start_s) || end_s > audio.duration() + half_sample)
    throw ValidationError("clip interval [" + std::to_string(start_s) + ", " +
                          std::to_string(end_s) + "] lies outside the audio (" +
                          std::to_string(audio.duration()) + " s)");
  AudioClip clip;
  clip.video_id = video_id;
  clip.start_s = start_s;
  clip.end_s = end_s;
  clip.sample_rate = kAnalysisSampleRate;
  const auto count = static_cast<std::size_t>(std::llround((end_s - start_s) * kAnalysisSampleRate));
  clip.samples.resize(count);
  const auto& src = audio.mono;
  const auto n_src = static_cast<std::int64_t>(src.size());

  if (audio.sample_rate == kAnalysisSampleRate) {
    const auto first = std::llround(start_s * kAnalysisSampleRate);
    for (std::size_t n = 0; n < count; ++n) {
      const auto k = first + static_cast<std::int64_t>(n);
      clip.samples[n] = (k >= 0 && k < n_src) ? src[static_cast<std::size_t>(k)] : 0.0f;
    }
    return clip;
  }

  const double ratio = static_cast<double>(audio.sample_rate) / kAnalysisSampleRate;
  const double cutoff = std::min(1.0, 1.0 / ratio);
  const auto half_width = static_cast<std::int64_t>(std::ceil(16.0 / cutoff));
  for (std::size_t n = 0; n < count; ++n) {
    const double x = (start_s + static_cast<double>(n) / kAnalysisSampleRate) * audio.sample_rate;
    const auto center = static_cast<std::int64_t>(std::floor(x));
    double acc = 0.0;
    for (std::int64_t k = center - half_width + 1; k <= center + half_width; ++k) {
      if (k < 0 || k >= n_src) continue;
      const double d = x - static_cast<double>(k);
      const double arg = std::numbers::pi * cutoff * d;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double u = (d + half_width) / (2.0 * half_width);  // in [0, 1]
      const double window = 0.42 - 0.5 * std::cos(2 * std::numbers::pi * u) +
                            0.08 * std::cos(4 * std::numbers::pi * u);
      acc += src[static_cast<std::size_t>(k)] * cutoff * sinc * window;
    }
    clip.samples[n] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return clip;
}

inline AudioClip LoadClip(const std::filesystem::path& path, double start_s, double end_s,
                          const std::string& video_id = {}) {
  return ClipAudio(ReadWav(path), start_s, end_s, video_id);
}

}  // namespace laughtrack
