// Copyright 2026 The VTT Authors.
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
#include <numbers>

namespace vtt {

// Counter-based standard normal generator.
//
// The stream is SplitMix64 seeded with `seed`: output n (n >= 1) is
// mix(seed + n * 0x9E3779B97F4A7C15). Cell k of a matrix (k = i * cols + j)
// consumes outputs 2k+1 and 2k+2, so any cell can be generated independently
// of traversal order. The two outputs feed Box-Muller:
//
//   u1 = ((z1 >> 11) + 1) * 2^-53   in (0, 1]
//   u2 =  (z2 >> 11)      * 2^-53   in [0, 1)
//   x  = sqrt(-2 ln u1) * cos(2 pi u2)
//
// and x is rounded to float. Results are bit-stable for a given libm.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// n-th output (1-based) of the SplitMix64 stream seeded with `seed`.
constexpr std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t n) noexcept {
  return splitmix64_mix(seed + n * kGoldenGamma);
}

inline double gaussian_at(std::uint64_t seed, std::uint64_t cell) noexcept {
  const std::uint64_t z1 = splitmix64_at(seed, 2 * cell + 1);
  const std::uint64_t z2 = splitmix64_at(seed, 2 * cell + 2);
  constexpr double kInv53 = 1.0 / 9007199254740992.0;
  const double u1 = static_cast<double>((z1 >> 11) + 1) * kInv53;
  const double u2 = static_cast<double>(z2 >> 11) * kInv53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Entry (i, j) of a rows x cols standard normal matrix.
inline float gaussian_entry(std::uint64_t seed, std::uint64_t i, std::uint64_t j, std::uint64_t cols) noexcept {
  return static_cast<float>(gaussian_at(seed, i * cols + j));
}

}  // namespace vtt
