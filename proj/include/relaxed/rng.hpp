// Copyright 2026 The relaxed authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace relaxed {

__extension__ using uint128 = unsigned __int128;

/// SplitMix64 finalizer. Only used to turn (seed, stream) pairs into
/// well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seedable, splittable 64-bit generator (mt19937_64 underneath).
///
/// Every simulated or real thread owns one stream. Streams are identified by
/// (seed, stream id) and are independent of each other and of scheduling,
/// which is what the oblivious-adversary model needs. All derived samples
/// (indices, unit reals, exponentials) are computed here rather than through
/// <random> distributions so trajectories are bit-identical across standard
/// library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(mix64(seed ^ mix64(stream))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Child generator; the same (parent, child) pair always yields the same
  /// stream.
  Rng split(std::uint64_t child) const {
    return Rng(mix64(seed_ + 0x632be59bd9b4e019ULL * (stream_ + 1)), child);
  }

  /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    uint128 product =
        static_cast<uint128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        product = static_cast<uint128>(engine_()) * n;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Exponential sample with the given rate; strictly positive.
  double exponential(double rate) {
    // 1 - u lies in (0, 1], so the log is finite and the sample is >= 0;
    // u == 0 maps to exactly 0, which is re-drawn.
    for (;;) {
      const double sample = -std::log1p(-uniform01()) / rate;
      if (sample > 0.0) return sample;
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace relaxed
