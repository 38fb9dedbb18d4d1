// Copyright 2026 The hdqkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace hdqkd {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded random source with a platform-independent output stream.
// std::uniform_real_distribution is implementation-defined, so the
// uniform variates are built from the raw 64-bit engine output directly.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Independent stream for worker/batch `index` of a master seed.
  // Derivation: splitmix64(master + index), stable across releases.
  static RandomSource derived(std::uint64_t master, std::uint64_t index) {
    return RandomSource(master + index);
  }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  bool coin() noexcept { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hdqkd
