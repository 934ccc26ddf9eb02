// Copyright 2026 The faircal Authors
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

#include <cmath>
#include <cstdint>

namespace faircal {

// splitmix64. Standard library engines and distributions are
// implementation-defined, which would break byte-identical reports across
// platforms, so every random draw in the project goes through this.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // Uniform integer in [0, n). n must be > 0. Multiply-shift; the bias of
  // ~n/2^64 is irrelevant at the sample sizes used here.
  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Draws from a categorical distribution given by `probs[0..m)`.
  // Returns a 0-based index.
  int categorical(const double* probs, int m) {
    double u = uniform01();
    double acc = 0.0;
    for (int i = 0; i + 1 < m; ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return m - 1;
  }

  // Box-Muller, one value per call.
  double gaussian(double mean = 0.0, double sd = 1.0) {
    double u1 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    double u2 = uniform01();
    double z = std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + z * sd;
  }

 private:
  uint64_t state_;
};

// Seed for a parallel task: seed xor a mixed task index. Mixing keeps
// nearby indices from producing overlapping splitmix streams while still
// being a pure function of (seed, index), so serial and parallel
// schedules draw identical numbers.
inline uint64_t derive_seed(uint64_t seed, uint64_t task_index) {
  Rng mix(task_index + 1);
  return seed ^ mix.next_u64();
}

}  // namespace faircal
