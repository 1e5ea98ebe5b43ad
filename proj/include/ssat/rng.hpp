// Copyright 2026 The ssat Authors
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

#ifndef SSAT_RNG_HPP_
#define SSAT_RNG_HPP_

#include <cstdint>
#include <random>

namespace ssat
{

using Rng = std::mt19937_64;

// Derive an independent stream seed from a base seed and an index (splitmix64 step).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index)
{
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform(Rng & rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(Rng & rng, double mean = 0.0, double sd = 1.0)
{
  return std::normal_distribution<double>(mean, sd)(rng);
}

inline int uniform_int(Rng & rng, int lo, int hi)  // inclusive bounds
{
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace ssat

#endif  // SSAT_RNG_HPP_
