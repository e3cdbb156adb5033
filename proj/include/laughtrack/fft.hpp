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

// Thin RAII layer over FFTW's real-to-complex transform. Plans are created once
// per size under a lock (FFTW's planner is not thread-safe) and then executed
// through the new-array interface, which is.

#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "laughtrack/error.hpp"

namespace laughtrack {

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwArray = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwArray<T> FftwAlloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw Error("fftw_malloc failed");
  return FftwArray<T>(p);
}

class PlanCache {
 public:
  static PlanCache& Instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan Get(std::size_t n) {
    std::lock_guard lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto in = FftwAlloc<double>(n);
    auto out = FftwAlloc<fftw_complex>(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(),
                                          FFTW_ESTIMATE);
    if (plan == nullptr) throw Error("fftw plan creation failed");
    plans_.emplace(n, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mu_;
  std::map<std::size_t, fftw_plan> plans_;
};

}  // namespace detail

// Forward real FFT of fixed size. Instances are cheap; reuse one per thread.
class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        plan_(detail::PlanCache::Instance().Get(n)),
        in_(detail::FftwAlloc<double>(n)),
        out_(detail::FftwAlloc<fftw_complex>(n / 2 + 1)) {}

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // Zero-pads (or truncates) `x` to the transform size.
  void Forward(std::span<const double> x) {
    const std::size_t m = std::min(x.size(), n_);
    for (std::size_t i = 0; i < m; ++i) in_[i] = x[i];
    for (std::size_t i = m; i < n_; ++i) in_[i] = 0.0;
    fftw_execute_dft_r2c(plan_, in_.get(), out_.get());
  }

  std::complex<double> bin(std::size_t k) const { return {out_[k][0], out_[k][1]}; }
  double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

 private:
  std::size_t n_;
  fftw_plan plan_;
  detail::FftwArray<double> in_;
  detail::FftwArray<fftw_complex> out_;
};

inline std::size_t NextPowerOfTwo(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace laughtrack
