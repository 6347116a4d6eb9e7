// Copyright 2026 The prsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
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
#include <numbers>

namespace prsim {

// Stream tags separate independent uses of the same (instance, sample) key.
enum class StreamTag : uint64_t {
  kLength = 1,
  kToken = 2,
  kHistogram = 3,
};

// Sample index used for draws shared by every sample of an instance.
inline constexpr uint64_t kInstanceShared = std::numeric_limits<uint64_t>::max();

inline constexpr uint64_t SplitMix64(uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based random stream keyed by (seed, instance, sample, tag). Each
// draw is a pure function of the key and the draw index, so the value seen by
// a sample never depends on how many draws other samples consumed or on the
// order in which a scheduler visits them.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t instance_id, uint64_t sample_index,
             StreamTag tag) noexcept
      : key_(Mix(Mix(Mix(SplitMix64(seed), instance_id), sample_index),
                 static_cast<uint64_t>(tag))) {}

  uint64_t Bits(uint64_t draw_index) const noexcept {
    return SplitMix64(key_ ^ SplitMix64(draw_index + 0x632be59bd9b4e019ULL));
  }

  // Uniform on the open interval (0, 1).
  double Uniform(uint64_t draw_index) const noexcept {
    return (static_cast<double>(Bits(draw_index) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on draws (2i, 2i+1).
  double Normal(uint64_t index) const noexcept {
    const double u1 = Uniform(2 * index);
    const double u2 = Uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr uint64_t Mix(uint64_t key, uint64_t value) noexcept {
    return SplitMix64(key ^ (value * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL));
  }

  uint64_t key_;
};

}  // namespace prsim
